"""
poisoncert/data/tables.py
Feature tables exchanged as CSV: columns f0..f{m-1} and an optional final `label`.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from poisoncert.utils.exceptions import DataError

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"
_FEATURE_PATTERN = re.compile(r"^f(\d+)$")


@dataclass
class FeatureTable:
    """Raw features, optional labels in {−1, +1} (or scores in [−1, 1] when continuous)."""
    X: np.ndarray
    y: Optional[np.ndarray] = None
    columns: List[str] = field(default_factory=list)
    continuous_labels: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise DataError(f"feature matrix must be a non-empty 2-d array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("feature matrix contains NaN or Inf")
        self.X = X
        if not self.columns:
            self.columns = [f"f{i}" for i in range(X.shape[1])]
        if len(self.columns) != X.shape[1]:
            raise DataError(f"{len(self.columns)} column names for {X.shape[1]} features")

        if self.y is not None:
            y = np.asarray(self.y, dtype=float).reshape(-1)
            if y.shape[0] != X.shape[0]:
                raise DataError(f"{y.shape[0]} labels for {X.shape[0]} rows")
            if not np.all(np.isfinite(y)):
                raise DataError("labels contain NaN or Inf")
            if self.continuous_labels:
                if np.any(np.abs(y) > 1.0):
                    raise DataError("continuous labels must lie in [-1, 1]")
            elif not np.all(np.isin(y, (-1.0, 1.0))):
                raise DataError("labels must be -1 or +1")
            self.y = y

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, rows: np.ndarray) -> "FeatureTable":
        return FeatureTable(self.X[rows], None if self.y is None else self.y[rows], list(self.columns),
                            self.continuous_labels)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=self.columns)
        if self.y is not None:
            frame[LABEL_COLUMN] = self.y
        return frame


def load_table(path: Union[str, Path], continuous_labels: bool = False) -> FeatureTable:
    """Read a feature CSV; the feature columns must be f0, f1, ... in order."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot read feature table {path}: {e}") from e

    columns = list(frame.columns)
    y = None
    if columns and columns[-1] == LABEL_COLUMN:
        y = frame.pop(LABEL_COLUMN).to_numpy(dtype=float)
        columns = columns[:-1]
    elif LABEL_COLUMN in columns:
        raise DataError("the label column must come last")

    indices = [_FEATURE_PATTERN.match(str(name)) for name in columns]
    if not columns or any(m is None for m in indices) or [int(m.group(1)) for m in indices] != list(range(len(columns))):
        raise DataError(f"{path}: feature columns must be named f0..f{len(columns) - 1}")

    try:
        X = frame[columns].to_numpy(dtype=float)
    except ValueError as e:
        raise DataError(f"{path}: non-numeric feature values: {e}") from e
    logger.debug("loaded %d rows x %d features from %s", X.shape[0], X.shape[1], path)
    return FeatureTable(X, y, columns, continuous_labels)


def save_table(table: FeatureTable, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame().to_csv(path, index=False, encoding="utf-8")
    return path


def train_test_split(table: FeatureTable, test_fraction: float = 0.2, seed: int = 0):
    """Seeded random split into (train, test); both parts keep at least one row."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    n = table.n_rows
    if n < 2:
        raise DataError("need at least two rows to split")
    n_test = min(max(int(round(test_fraction * n)), 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    return table.subset(np.sort(order[n_test:])), table.subset(np.sort(order[:n_test]))
