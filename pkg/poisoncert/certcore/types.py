"""
poisoncert/certcore/types.py
Domain types shared by the certificate, simulation and oracle code.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from poisoncert.utils.exceptions import ContractViolation
from poisoncert.utils.validation import (
    as_psd,
    as_symmetric,
    as_vector,
    psd_sqrt,
    require_range,
)


@dataclass(frozen=True, eq=False)
class QuadraticMultiplier:
    """λ(θ) = θᵀAθ + θᵀb + offset."""
    A: np.ndarray
    b: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        A = as_symmetric(self.A, "A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", as_vector(self.b, "b", A.shape[0]))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        """Evaluate on a single point or a stack of points (..., d)."""
        theta = np.asarray(theta, dtype=float)
        return np.einsum("...i,ij,...j->...", theta, self.A, theta) + theta @ self.b + self.offset

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return 2.0 * np.asarray(theta, dtype=float) @ self.A + self.b

    def shifted(self, constant: float) -> "QuadraticMultiplier":
        return QuadraticMultiplier(self.A, self.b, self.offset + constant)

    @classmethod
    def zero(cls, dim: int) -> "QuadraticMultiplier":
        return cls(np.zeros((dim, dim)), np.zeros(dim))


@dataclass(frozen=True, eq=False)
class GaussianSource:
    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        mu = as_vector(self.mu, "mu")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", as_psd(self.Sigma, "Sigma", mu.shape[0]))
        object.__setattr__(self, "_factor", psd_sqrt(self.Sigma))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def sample(self, rng: np.random.Generator, size: int = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.mu + rng.standard_normal(shape) @ self._factor.T


@dataclass(frozen=True, eq=False)
class EmpiricalSource:
    """Uniform distribution over a finite set of points (rows)."""
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ContractViolation("empirical source needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ContractViolation("empirical points contain non-finite entries")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def require_unit_norm(self) -> None:
        if np.max(np.linalg.norm(self.points, axis=1)) > 1.0 + 1e-12:
            raise ContractViolation("classification points must satisfy ||z|| <= 1")

    def sample(self, rng: np.random.Generator, size: int = None) -> np.ndarray:
        idx = rng.integers(self.size, size=size)
        return self.points[idx]


BenignSource = Union[GaussianSource, EmpiricalSource]


@dataclass(frozen=True, eq=False)
class ContaminatedStream:
    """ε δ(z_adv) + (1 − ε) P_data."""
    epsilon: float
    benign: BenignSource

    def __post_init__(self):
        object.__setattr__(self, "epsilon", require_range(self.epsilon, "epsilon", 0.0, 1.0))

    @property
    def dim(self) -> int:
        return self.benign.dim


@dataclass(frozen=True, eq=False)
class MeanRule:
    """θ' = (1 − η)θ + ηz + ηBw with BBᵀ = S and w standard normal."""
    eta: float
    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", require_range(self.eta, "eta", 0.0, 1.0, low_open=True))
        S = as_psd(self.S, "S")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "B", psd_sqrt(S))

    @property
    def dim(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True, eq=False)
class HingeRule:
    """One gradient step on σ/2‖θ‖² + max(0, 1 − θᵀz)."""
    eta: float
    sigma: float

    def __post_init__(self):
        eta = require_range(self.eta, "eta", 0.0, low_open=True)
        sigma = require_range(self.sigma, "sigma", 0.0, low_open=True)
        if not 0.0 < sigma * eta < 1.0:
            raise ContractViolation("hinge rule needs 0 < sigma * eta < 1")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma", sigma)

    @property
    def contraction(self) -> float:
        return 1.0 - self.sigma * self.eta

    @property
    def radius(self) -> float:
        """Norm bound 1/σ kept by every trajectory started inside it."""
        return 1.0 / self.sigma


LearningRule = Union[MeanRule, HingeRule]


@dataclass(frozen=True, eq=False)
class SquaredDistance:
    """ℓ_adv(θ) = ‖μ − θ‖²."""
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", as_vector(self.mu, "mu"))

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        diff = np.asarray(theta, dtype=float) - self.mu
        return np.einsum("...i,...i->...", diff, diff)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(theta, dtype=float) - self.mu)


@dataclass(frozen=True, eq=False)
class HingeOnTarget:
    """ℓ_adv(θ) = mean over targets of max(0, 1 − θᵀz)."""
    targets: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.targets, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ContractViolation("hinge objective needs at least one target")
        object.__setattr__(self, "targets", pts)

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        margins = 1.0 - np.asarray(theta, dtype=float) @ self.targets.T
        return np.maximum(margins, 0.0).mean(axis=-1)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        active = (1.0 - np.asarray(theta, dtype=float) @ self.targets.T) > 0.0
        return -(active.astype(float) @ self.targets) / self.targets.shape[0]


AdversarialObjective = Union[SquaredDistance, HingeOnTarget]


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball, used for both the θ domain and the adversarial set."""
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, "center"))
        object.__setattr__(self, "radius", require_range(self.radius, "radius", 0.0))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        dist = np.linalg.norm(np.asarray(points, dtype=float) - self.center, axis=-1)
        return dist <= self.radius * (1.0 + tol) + tol

    def project(self, points: np.ndarray) -> np.ndarray:
        diff = np.asarray(points, dtype=float) - self.center
        norm = np.linalg.norm(diff, axis=-1, keepdims=True)
        scale = np.where(norm > self.radius, self.radius / np.maximum(norm, 1e-300), 1.0)
        return self.center + diff * scale

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        direction = rng.standard_normal((size, self.dim))
        direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
        radii = self.radius * rng.random(size) ** (1.0 / self.dim)
        return self.center + direction * radii[:, None]

    def grid(self, points_per_axis: int) -> np.ndarray:
        axes = [np.linspace(c - self.radius, c + self.radius, points_per_axis) for c in self.center]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return mesh[self.contains(mesh)]


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = as_vector(self.lower, "lower")
        upper = as_vector(self.upper, "upper", lower.shape[0])
        if np.any(upper < lower):
            raise ContractViolation("box upper corner must dominate the lower corner")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= self.lower - tol) & (points <= self.upper + tol), axis=-1)

    def project(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * rng.random((size, self.dim))

    def grid(self, points_per_axis: int) -> np.ndarray:
        axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(self.lower, self.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)


Domain = Union[Ball, Box]


def check_dimensions(rule: LearningRule, stream: ContaminatedStream, obj: AdversarialObjective,
                     dim: int) -> None:
    """Raise ContractViolation unless every component lives in R^dim."""
    dims = {"stream": stream.dim}
    if isinstance(rule, MeanRule):
        dims["rule"] = rule.dim
    if isinstance(obj, SquaredDistance):
        dims["objective"] = obj.mu.shape[0]
    else:
        dims["objective"] = obj.targets.shape[1]
    bad = {k: v for k, v in dims.items() if v != dim}
    if bad:
        raise ContractViolation(f"dimension mismatch, expected {dim}: {bad}")
