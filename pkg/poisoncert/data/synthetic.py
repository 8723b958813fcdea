"""
poisoncert/data/synthetic.py
Synthetic tasks and datasets.
"""

from typing import Tuple

import numpy as np

from poisoncert.data.tables import FeatureTable
from poisoncert.meta.priors import TaskPrior, sample_task
from poisoncert.utils.exceptions import ContractViolation


def gen_gaussian_task(d: int, seed) -> Tuple[np.ndarray, np.ndarray]:
    return sample_task(TaskPrior(d=d), seed)


def gen_blobs(d: int, N: int, margin: float, seed: int, spread: float = 1.0) -> FeatureTable:
    """Two Gaussian clusters at ±margin·u for a random unit u, labelled by cluster."""
    if margin < 0:
        raise ContractViolation("margin must be nonnegative")
    if spread <= 0:
        raise ContractViolation("spread must be positive")
    if d < 1 or N < 2:
        raise ContractViolation("need d >= 1 and N >= 2")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    labels = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    labels = labels[rng.permutation(N)]
    X = labels[:, None] * margin * u[None, :] + spread * rng.standard_normal((N, d))
    return FeatureTable(X, labels)
