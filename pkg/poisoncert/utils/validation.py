"""
poisoncert/utils/validation.py
"""

from typing import Optional

import numpy as np

from poisoncert.utils.exceptions import ContractViolation

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


def as_vector(value, name: str, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a finite 1-d float array, checking the length if given."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolation(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def as_matrix(value, name: str, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a finite square float matrix (scalars become 1x1)."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"{name} must be a square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolation(f"{name} is {arr.shape[0]}x{arr.shape[0]}, expected {dim}x{dim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def as_symmetric(value, name: str, dim: Optional[int] = None, tol: float = SYMMETRY_TOL) -> np.ndarray:
    arr = as_matrix(value, name, dim)
    if np.max(np.abs(arr - arr.T), initial=0.0) > tol:
        raise ContractViolation(f"{name} is not symmetric")
    return arr


def as_psd(value, name: str, dim: Optional[int] = None, tol: float = PSD_TOL) -> np.ndarray:
    """Symmetric matrix whose smallest eigenvalue is above -tol (relative)."""
    arr = as_symmetric(value, name, dim, tol=max(SYMMETRY_TOL, 1e-12 * np.abs(value).max(initial=1.0)))
    arr = 0.5 * (arr + arr.T)
    if arr.size and np.linalg.eigvalsh(arr)[0] < -tol * max(1.0, np.abs(arr).max()):
        raise ContractViolation(f"{name} is not positive semidefinite")
    return arr


def require_range(value: float, name: str, low: float = None, high: float = None,
                  low_open: bool = False, high_open: bool = False) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ContractViolation(f"{name} must be finite")
    if low is not None and (value < low or (low_open and value == low)):
        raise ContractViolation(f"{name}={value} is below its allowed range")
    if high is not None and (value > high or (high_open and value == high)):
        raise ContractViolation(f"{name}={value} is above its allowed range")
    return value


def psd_sqrt(S: np.ndarray) -> np.ndarray:
    """Symmetric factor B with B Bᵀ = S for PSD (possibly singular) S."""
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
