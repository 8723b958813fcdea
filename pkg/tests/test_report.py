"""
tests/test_report.py
"""

import json

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from poisoncert.cli.report import (
    TABLE_COLUMNS,
    AttackRecord,
    InstanceRecord,
    RunReport,
    config_hash,
    load_report,
    matrix_digest,
    merge_tables,
    report_table,
    write_run,
)


def record(verified=1.0, attacks=((0.5, 0.01),)):
    return InstanceRecord(
        kind="mean",
        epsilon=0.1,
        eta=0.2,
        certificate_solver=verified,
        certificate_verified=verified,
        attack_results=[AttackRecord(policy="greedy", mean=m, stderr=s, seeds=4) for m, s in attacks],
    )


class TestHashing:

    def test_key_order_does_not_matter(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})

    def test_values_matter(self):
        assert config_hash({"eta": 0.1}) != config_hash({"eta": 0.2})

    def test_numpy_values(self):
        assert config_hash({"x": np.float64(0.5), "v": np.arange(2)}) == config_hash({"x": 0.5, "v": [0, 1]})

    def test_matrix_digest(self):
        assert matrix_digest(np.eye(2)) == matrix_digest(np.eye(2) + 1e-15)
        assert matrix_digest(np.eye(2)) != matrix_digest(2 * np.eye(2))
        assert len(matrix_digest(np.eye(2))) == 16


class TestRecords:

    def test_solver_value_needs_verified(self):
        with pytest.raises(ValidationError):
            InstanceRecord(kind="mean", epsilon=0.1, eta=0.2, certificate_solver=1.0)

    def test_epsilon_range(self):
        with pytest.raises(ValidationError):
            InstanceRecord(kind="mean", epsilon=1.5, eta=0.2)

    def test_attack_below_certificate(self):
        assert not record().check_dominance(2.0)

    def test_attack_within_tolerance(self):
        assert not record(attacks=[(1.015, 0.01)]).check_dominance(2.0)

    def test_attack_above_certificate(self):
        flagged = record(attacks=[(0.2, 0.0), (1.05, 0.01)])
        assert flagged.check_dominance(2.0)
        assert flagged.violation
        report = RunReport(command="certify mean", config_hash="0" * 64, seed=0, records=[flagged, record()])
        assert report.violations == [flagged]

    def test_simulation_only_record_never_violates(self):
        plain = InstanceRecord(kind="mean", epsilon=0.1, eta=0.2,
                               attack_results=[AttackRecord(policy="pgd", mean=9.0, stderr=0.0, seeds=2)])
        assert not plain.check_dominance(2.0)


class TestRunDirectory:

    def test_table_rows(self):
        bare = InstanceRecord(kind="class", epsilon=0.0, eta=0.1, sigma=0.01)
        table = report_table(RunReport(command="x", config_hash="h", seed=0,
                                       records=[record(attacks=[(0.1, 0.0), (0.2, 0.0)]), bare]))
        assert list(table.columns) == TABLE_COLUMNS
        assert len(table) == 3
        assert table["policy"].isna().sum() == 1

    def test_write_and_load(self, tmp_path):
        report = RunReport(command="certify mean", config_hash="abc", seed=7, records=[record()],
                           notes={"source": "test"})
        out = write_run(report, tmp_path / "run", {"command": "certify mean", "params": {"eta": 0.2}})
        assert {p.name for p in out.iterdir()} == {"report.json", "table.csv", "config.txt", "schema.json"}
        assert load_report(out) == report
        assert "config_hash = abc" in (out / "config.txt").read_text()
        assert "properties" in json.loads((out / "schema.json").read_text())

    def test_merge_tables(self, tmp_path):
        for name, verified in (("first", 1.0), ("second", 2.0)):
            write_run(RunReport(command="x", config_hash=name, seed=0, records=[record(verified)]),
                      tmp_path / name, {})
        merged = merge_tables([tmp_path / "first", tmp_path / "second"])
        assert list(merged.columns) == ["run"] + TABLE_COLUMNS
        assert merged["run"].tolist() == ["first", "second"]
        assert merged["certificate"].tolist() == [1.0, 2.0]

    def test_merge_nothing(self):
        assert isinstance(merge_tables([]), pd.DataFrame)
