"""
poisoncert/data/preprocess.py
Feature preprocessing for the classification certificate.

Order: center columns, project onto the top-d right singular directions,
append a constant 1, divide by the largest row norm, multiply by the label.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from poisoncert.data.tables import LABEL_COLUMN, FeatureTable, train_test_split
from poisoncert.utils.exceptions import DataError

logger = logging.getLogger(__name__)

_RANK_TOL = 1e-10


@dataclass
class ProcessedDataset:
    """Rows of Z satisfy ‖z‖ ≤ 1; the stored transform replays on new raw rows."""
    Z: np.ndarray
    scale: float
    mean_shift: np.ndarray
    projection: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.projection.shape[1]

    def transform(self, X, y=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.projection.shape[0]:
            raise DataError(f"expected rows with {self.projection.shape[0]} features, got shape {X.shape}")
        reduced = (X - self.mean_shift) @ self.projection
        Z = np.hstack([reduced, np.ones((X.shape[0], 1))]) / self.scale
        if y is not None:
            Z = Z * np.asarray(y, dtype=float).reshape(-1, 1)
        return Z

    def transform_table(self, table: FeatureTable) -> np.ndarray:
        return self.transform(table.X, table.y)

    def sidecar(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "scale": self.scale,
            "mean_shift": self.mean_shift.tolist(),
            "projection": self.projection.tolist(),
            "labelled": self.labels is not None,
        }


def _principal_directions(centered: np.ndarray, d: int) -> np.ndarray:
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(singular > _RANK_TOL * max(1.0, singular[0] if singular.size else 0.0)))
    if rank < d:
        raise DataError(f"centered features have rank {rank}, fewer than the requested d={d}", rank=rank)
    directions = vt[:d].T
    # deterministic signs: largest-magnitude entry of every direction positive
    pivots = np.argmax(np.abs(directions), axis=0)
    signs = np.sign(directions[pivots, np.arange(d)])
    return directions * np.where(signs == 0, 1.0, signs)


def preprocess(table: FeatureTable, d: int) -> ProcessedDataset:
    """Fit the transform on `table` and return the processed rows with the fitted parameters."""
    n, m = table.X.shape
    if not 1 <= d <= m:
        raise DataError(f"d must lie in [1, {m}], got {d}")
    if n < d:
        raise DataError(f"need at least d={d} rows, got {n}")

    mean_shift = table.X.mean(axis=0)
    projection = _principal_directions(table.X - mean_shift, d)
    augmented = np.hstack([(table.X - mean_shift) @ projection, np.ones((n, 1))])
    scale = float(np.max(np.linalg.norm(augmented, axis=1)))
    dataset = ProcessedDataset(np.empty((0, d + 1)), scale, mean_shift, projection, table.y)
    dataset.Z = dataset.transform(table.X, table.y)
    logger.info("preprocessed %d rows: %d features -> %d dimensions (+ bias), scale %.4g", n, m, d, scale)
    return dataset


def preprocess_split(table: FeatureTable, d: int, test_fraction: float = 0.2,
                     seed: int = 0) -> Tuple[ProcessedDataset, np.ndarray]:
    """Fit on a seeded train split and replay the transform on the test split.

    Test rows may exceed unit norm slightly; they are clipped back onto the unit ball.
    """
    train, test = train_test_split(table, test_fraction, seed)
    dataset = preprocess(train, d)
    Z_test = dataset.transform_table(test)
    norms = np.linalg.norm(Z_test, axis=1, keepdims=True)
    return dataset, Z_test / np.maximum(norms, 1.0)


def save_dataset(dataset: ProcessedDataset, path: Union[str, Path]) -> Path:
    """Matrix CSV (z0..z{d}, optional label) plus a JSON sidecar with the transform."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.Z, columns=[f"z{i}" for i in range(dataset.Z.shape[1])])
    if dataset.labels is not None:
        frame[LABEL_COLUMN] = dataset.labels
    frame.to_csv(path, index=False, encoding="utf-8")
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as f:
        json.dump(dataset.sidecar(), f, indent=2)
    return path


def load_dataset(path: Union[str, Path]) -> ProcessedDataset:
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    try:
        frame = pd.read_csv(path, encoding="utf-8")
        with open(sidecar_path, "r", encoding="utf-8") as f:
            sidecar = json.load(f)
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise DataError(f"Cannot read processed dataset {path}: {e}") from e

    labels = frame.pop(LABEL_COLUMN).to_numpy(dtype=float) if LABEL_COLUMN in frame.columns else None
    Z = frame.to_numpy(dtype=float)
    if np.any(np.linalg.norm(Z, axis=1) > 1.0 + 1e-9):
        raise DataError(f"{path}: processed rows exceed unit norm")
    return ProcessedDataset(
        Z=Z,
        scale=float(sidecar["scale"]),
        mean_shift=np.asarray(sidecar["mean_shift"], dtype=float),
        projection=np.asarray(sidecar["projection"], dtype=float).reshape(len(sidecar["mean_shift"]), -1),
        labels=labels,
    )
