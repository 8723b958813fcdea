"""
tests/conftest.py
Shared fixtures.
"""

import numpy as np
import pytest

from poisoncert.certificates import ClassInstance, MeanInstance
from poisoncert.config.settings import SearchSettings


@pytest.fixture
def fast_search():
    """Small verification budget for unit tests."""
    return SearchSettings(restarts=8, grid_points_per_axis=21, max_ascent_iterations=100)


@pytest.fixture
def mean_1d():
    return MeanInstance(mu=[0.5], Sigma=[[1.0]], eta=0.5, S=[[0.2]], epsilon=0.1, r=1.0)


@pytest.fixture
def mean_2d():
    return MeanInstance(mu=[0.3, -0.2], Sigma=np.diag([1.0, 0.5]), eta=0.5, S=0.1 * np.eye(2), epsilon=0.2, r=1.0)


@pytest.fixture
def tiny_points():
    """Three label-multiplied points inside the unit disc, away from grid-aligned ties."""
    rng = np.random.default_rng(11)
    raw = rng.uniform(-1.0, 1.0, size=(3, 2))
    return 0.9 * raw / np.linalg.norm(raw, axis=1, keepdims=True) * rng.uniform(0.4, 1.0, size=(3, 1))


@pytest.fixture
def tiny_class(tiny_points):
    return ClassInstance(tiny_points, eta=0.1, sigma=0.5, epsilon=0.1)
