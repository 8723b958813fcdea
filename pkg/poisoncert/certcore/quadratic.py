"""
poisoncert/certcore/quadratic.py
Exact maximization of a quadratic over a ball, optionally cut by a half-space.

Every stationary point of the problem is enumerated (secular-equation roots on
the sphere, hard-case points, the interior stationary point, and the same
enumeration on the hyperplane slice), so the best feasible candidate is the
global maximum. All routines are batched over a leading axis.
"""

from typing import Optional, Tuple

import numpy as np

GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)
_GOLDEN_ITERATIONS = 64
_BISECTION_ITERATIONS = 64


def _safe_reciprocal(values: np.ndarray, tiny: np.ndarray) -> np.ndarray:
    """1/values, with entries below tiny in magnitude mapped to 0."""
    out = np.zeros_like(values)
    mask = np.abs(values) > tiny
    out[mask] = 1.0 / values[mask]
    return out


def _secular(weights: np.ndarray, eigvals: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """φ(γ) = Σ w_i / (q_i − γ)² for gamma of shape (B, J)."""
    diff = eigvals[:, None, :] - gamma[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[:, None, :] / diff ** 2
    terms = np.where(weights[:, None, :] == 0.0, 0.0, terms)
    return terms.sum(axis=-1)


def secular_roots(eigvals: np.ndarray, ctilde: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Multipliers γ with ‖(Q − γI)⁻¹c/2‖ = ρ, two slots per eigen-interval.

    Returns an array of shape (B, 2(k+1)); slots without a root hold NaN.
    """
    weights = 0.25 * ctilde ** 2
    target = (radius ** 2)[:, None]
    width = np.linalg.norm(ctilde, axis=1) / (2.0 * np.maximum(radius, 1e-300)) + 1.0
    width = np.minimum(width, 1e150)[:, None]
    lower = np.concatenate([eigvals[:, :1] - width, eigvals], axis=1)
    upper = np.concatenate([eigvals, eigvals[:, -1:] + width], axis=1)

    a, b = lower.copy(), upper.copy()
    for _ in range(_GOLDEN_ITERATIONS):
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        left_better = _secular(weights, eigvals, c) < _secular(weights, eigvals, d)
        b = np.where(left_better, d, b)
        a = np.where(left_better, a, c)
    middle = 0.5 * (a + b)
    has_root = _secular(weights, eigvals, middle) <= target

    lo, hi = lower.copy(), middle.copy()
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        above = _secular(weights, eigvals, mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    left_root = hi

    lo, hi = middle.copy(), upper.copy()
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        above = _secular(weights, eigvals, mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    right_root = lo

    roots = np.concatenate([left_root, right_root], axis=1)
    return np.where(np.concatenate([has_root, has_root], axis=1), roots, np.nan)


def _clip_rows(points: np.ndarray, radius: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=-1, keepdims=True)
    rho = radius.reshape((-1,) + (1,) * (points.ndim - 1))
    scale = np.where(norms > rho, rho / np.maximum(norms, 1e-300), 1.0)
    return points * scale


def ball_stationary_points(Q: np.ndarray, c: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Feasible superset of the KKT points of max uᵀQu + cᵀu s.t. ‖u‖ ≤ ρ.

    Args:
        Q: (B, k, k) symmetric matrices
        c: (B, k) linear terms
        radius: (B,) ball radii

    Returns:
        (B, M, k) candidate points, all inside their ball
    """
    n_batch, k = c.shape
    eigvals, eigvecs = np.linalg.eigh(Q)
    ctilde = np.einsum("bki,bk->bi", eigvecs, c)
    tiny = 1e-12 * (np.abs(eigvals).max(axis=1, keepdims=True) + 1.0)
    rho = radius[:, None]

    candidates = [-0.5 * ctilde * _safe_reciprocal(eigvals, tiny)]

    roots = secular_roots(eigvals, ctilde, radius)
    for j in range(roots.shape[1]):
        gamma = roots[:, j:j + 1]
        valid = np.isfinite(gamma)
        y = -0.5 * ctilde * _safe_reciprocal(eigvals - np.where(valid, gamma, 0.0), tiny)
        norm = np.linalg.norm(y, axis=1, keepdims=True)
        y = np.where(norm > 0, y * rho / np.maximum(norm, 1e-300), y)
        candidates.append(np.where(valid, y, 0.0))

    eye = np.eye(k)
    for j in range(k):
        y0 = -0.5 * ctilde * _safe_reciprocal(eigvals - eigvals[:, j:j + 1], tiny)
        slack = np.sqrt(np.maximum(rho ** 2 - np.sum(y0 ** 2, axis=1, keepdims=True), 0.0))
        candidates.append(y0 + slack * eye[j])
        candidates.append(y0 - slack * eye[j])

    Y = _clip_rows(np.stack(candidates, axis=1), radius)
    return np.einsum("bij,bmj->bmi", eigvecs, Y)


def householder_complement(normal: np.ndarray) -> np.ndarray:
    """Orthonormal bases (B, k, k−1) of the complements of unit normals (B, k)."""
    n_batch, k = normal.shape
    sign = np.where(normal[:, 0] >= 0.0, 1.0, -1.0)
    w = normal.copy()
    w[:, 0] += sign
    H = np.eye(k)[None] - 2.0 * np.einsum("bi,bj->bij", w, w) / np.sum(w * w, axis=1)[:, None, None]
    return H[:, :, 1:]


def _quad_values(Q: np.ndarray, g: np.ndarray, h: np.ndarray, Z: np.ndarray) -> np.ndarray:
    return np.einsum("bmi,bij,bmj->bm", Z, Q, Z) + np.einsum("bmi,bi->bm", Z, g) + h[:, None]


def maximize_on_ball(Q: np.ndarray, g: np.ndarray, h: np.ndarray, center: np.ndarray,
                     radius, normal: Optional[np.ndarray] = None,
                     offset: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """max zᵀQz + gᵀz + h over ‖z − center‖ ≤ ρ (and aᵀz ≤ offset when normal a is given).

    Q may be shared (k, k) or batched (B, k, k). Returns (values, maximizers);
    rows with an empty feasible set get −inf.
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    n_batch, k = g.shape
    Q = np.broadcast_to(np.asarray(Q, dtype=float), (n_batch, k, k))
    h = np.broadcast_to(np.asarray(h, dtype=float), (n_batch,))
    center = np.broadcast_to(np.asarray(center, dtype=float), (n_batch, k))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (n_batch,))

    c = 2.0 * np.einsum("bij,bj->bi", Q, center) + g
    Z = center[:, None, :] + ball_stationary_points(Q, c, radius)
    values = _quad_values(Q, g, h, Z)

    if normal is not None:
        normal = np.broadcast_to(np.asarray(normal, dtype=float), (n_batch, k))
        scale = np.maximum(1.0, np.abs(offset))
        feasible = np.einsum("bmi,bi->bm", Z, normal) <= offset + 1e-12 * scale
        values = np.where(feasible, values, -np.inf)

        Zs, slice_values = _hyperplane_candidates(Q, g, h, center, radius, normal, offset)
        Z = np.concatenate([Z, Zs], axis=1)
        values = np.concatenate([values, slice_values], axis=1)

    best = np.argmax(values, axis=1)
    rows = np.arange(n_batch)
    return values[rows, best], Z[rows, best]


def _hyperplane_candidates(Q, g, h, center, radius, normal, offset):
    n_batch, k = g.shape
    norm = np.linalg.norm(normal, axis=1)
    has_normal = norm > 0.0
    unit = np.where(has_normal[:, None], normal / np.maximum(norm, 1e-300)[:, None], np.eye(k)[0])
    dist = np.where(has_normal, (offset - np.sum(normal * center, axis=1)) / np.maximum(norm, 1e-300), np.inf)
    meets = has_normal & (np.abs(dist) <= radius)
    dist = np.where(meets, dist, 0.0)
    z0 = center + dist[:, None] * unit
    slice_radius = np.sqrt(np.maximum(radius ** 2 - dist ** 2, 0.0))

    if k == 1:
        Zs = z0[:, None, :]
    else:
        N = householder_complement(unit)
        Qs = np.einsum("bia,bij,bjc->bac", N, Q, N)
        cs = np.einsum("bia,bi->ba", N, 2.0 * np.einsum("bij,bj->bi", Q, z0) + g)
        Y = ball_stationary_points(Qs, cs, slice_radius)
        Zs = z0[:, None, :] + np.einsum("bia,bma->bmi", N, Y)

    values = _quad_values(Q, g, h, Zs)
    return Zs, np.where(meets[:, None], values, -np.inf)
