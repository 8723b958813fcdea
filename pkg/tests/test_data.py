"""
tests/test_data.py
"""

import numpy as np
import pandas as pd
import pytest

from poisoncert.data import (
    FeatureTable,
    gen_blobs,
    gen_gaussian_task,
    load_dataset,
    load_table,
    preprocess,
    preprocess_split,
    save_dataset,
    save_table,
    train_test_split,
)
from poisoncert.utils.exceptions import ContractViolation, DataError


@pytest.fixture
def blobs():
    return gen_blobs(4, 40, 2.0, seed=0)


class TestTables:

    def test_roundtrip(self, blobs, tmp_path):
        loaded = load_table(save_table(blobs, tmp_path / "blobs.csv"))
        assert np.allclose(loaded.X, blobs.X)
        assert np.array_equal(loaded.y, blobs.y)
        assert loaded.columns == ["f0", "f1", "f2", "f3"]

    def test_unlabelled(self, tmp_path):
        path = tmp_path / "plain.csv"
        pd.DataFrame({"f0": [1.0, 2.0], "f1": [0.5, 0.0]}).to_csv(path, index=False)
        table = load_table(path)
        assert table.y is None
        assert table.X.shape == (2, 2)

    @pytest.mark.parametrize("columns", [["f0", "g1"], ["f1", "f0"], ["label", "f0"]])
    def test_bad_columns(self, tmp_path, columns):
        path = tmp_path / "bad.csv"
        pd.DataFrame([[1.0, 1.0]], columns=columns).to_csv(path, index=False)
        with pytest.raises(DataError):
            load_table(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_table(tmp_path / "absent.csv")

    def test_label_values(self):
        with pytest.raises(DataError):
            FeatureTable(np.ones((2, 1)), np.array([1.0, 0.0]))
        table = FeatureTable(np.ones((2, 1)), np.array([0.5, -1.0]), continuous_labels=True)
        assert table.y[0] == 0.5

    def test_non_finite_features(self):
        with pytest.raises(DataError):
            FeatureTable(np.array([[np.nan, 1.0]]))

    def test_split_is_seeded_and_disjoint(self, blobs):
        train, test = train_test_split(blobs, 0.25, seed=3)
        again, _ = train_test_split(blobs, 0.25, seed=3)
        assert test.n_rows == 10
        assert train.n_rows == 30
        assert np.array_equal(train.X, again.X)

    def test_split_fraction(self, blobs):
        with pytest.raises(DataError):
            train_test_split(blobs, 1.0)


class TestPreprocess:

    def test_unit_norm_rows(self, blobs):
        dataset = preprocess(blobs, 2)
        norms = np.linalg.norm(dataset.Z, axis=1)
        assert dataset.Z.shape == (40, 3)
        assert norms.max() == pytest.approx(1.0)
        assert np.all(norms <= 1.0 + 1e-12)

    def test_orthonormal_projection(self, blobs):
        dataset = preprocess(blobs, 3)
        assert np.allclose(dataset.projection.T @ dataset.projection, np.eye(3))

    def test_labels_multiply_rows(self, blobs):
        dataset = preprocess(blobs, 2)
        unlabelled = dataset.transform(blobs.X)
        assert np.allclose(dataset.Z, unlabelled * blobs.y[:, None])
        assert np.allclose(unlabelled[:, -1], 1.0 / dataset.scale)

    def test_deterministic(self, blobs):
        assert np.array_equal(preprocess(blobs, 2).Z, preprocess(blobs, 2).Z)

    def test_rank_deficient(self):
        X = np.outer(np.arange(6.0), [1.0, 2.0, -1.0])
        with pytest.raises(DataError) as info:
            preprocess(FeatureTable(X), 2)
        assert info.value.rank == 1

    def test_dimension_range(self, blobs):
        with pytest.raises(DataError):
            preprocess(blobs, 5)
        with pytest.raises(DataError):
            preprocess(blobs, 0)

    def test_transform_checks_width(self, blobs):
        with pytest.raises(DataError):
            preprocess(blobs, 2).transform(np.ones((1, 3)))

    def test_split(self, blobs):
        dataset, Z_test = preprocess_split(blobs, 2, test_fraction=0.25, seed=1)
        assert dataset.Z.shape == (30, 3)
        assert Z_test.shape == (10, 3)
        assert np.all(np.linalg.norm(Z_test, axis=1) <= 1.0 + 1e-12)

    def test_dataset_roundtrip(self, blobs, tmp_path):
        dataset = preprocess(blobs, 2)
        loaded = load_dataset(save_dataset(dataset, tmp_path / "processed.csv"))
        assert np.allclose(loaded.Z, dataset.Z)
        assert np.array_equal(loaded.labels, dataset.labels)
        assert np.allclose(loaded.transform(blobs.X, blobs.y), dataset.Z)

    def test_dataset_rejects_large_rows(self, tmp_path):
        path = tmp_path / "processed.csv"
        pd.DataFrame({"z0": [2.0], "z1": [0.0]}).to_csv(path, index=False)
        path.with_suffix(".json").write_text('{"scale": 1.0, "mean_shift": [0.0], "projection": [[1.0]]}')
        with pytest.raises(DataError):
            load_dataset(path)


class TestSynthetic:

    def test_blobs_balanced(self):
        table = gen_blobs(3, 11, 1.0, seed=2)
        assert table.X.shape == (11, 3)
        assert np.sum(table.y == 1.0) == 6

    def test_blobs_separate_with_margin(self):
        table = gen_blobs(2, 200, 5.0, seed=0, spread=0.1)
        direction = np.linalg.lstsq(table.X, table.y, rcond=None)[0]
        assert np.all(np.sign(table.X @ direction) == table.y)

    def test_gaussian_task(self):
        mu, sigma = gen_gaussian_task(3, seed=4)
        again, _ = gen_gaussian_task(3, seed=4)
        assert mu.shape == (3,)
        assert np.array_equal(mu, again)
        assert np.linalg.eigvalsh(sigma).min() > 0

    def test_blobs_arguments(self):
        with pytest.raises(ContractViolation):
            gen_blobs(2, 10, -1.0, 0)
        with pytest.raises(ContractViolation):
            gen_blobs(2, 1, 1.0, 0)
