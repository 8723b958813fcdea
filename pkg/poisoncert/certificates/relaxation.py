"""
poisoncert/certificates/relaxation.py
Exhaustive oracles for the relaxed classification bound on tiny instances.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from poisoncert.certcore.types import Ball, QuadraticMultiplier
from poisoncert.certificates.classification import ClassInstance
from poisoncert.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 20
MAX_POINTS = 8
MAX_DIM = 2
_CONSISTENCY_TOL = 1e-12
_CHUNK = 512


def big_m(sigma: float) -> float:
    """|θᵀz| ≤ 1/σ on the domain, so 1 + 1/σ bounds 1 − θᵀz."""
    return 1.0 + 1.0 / sigma


def mccormick_envelopes(theta, q, w, sigma: float) -> np.ndarray:
    """Slacks of the four envelope inequalities for w = q·θ, θ ∈ [−1/σ, 1/σ]ᵈ, q ∈ [0, 1].

    Returns an array of shape (4, ...) that is componentwise ≥ 0 exactly when
    (θ, q, w) lies in the envelope.
    """
    theta = np.asarray(theta, dtype=float)
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    low, high = -1.0 / sigma, 1.0 / sigma
    return np.stack([
        w - low * q,
        w - (high * q + theta - high),
        high * q - w,
        (low * q + theta - low) - w,
    ])


@dataclass
class BruteForceResult:
    value: float
    theta: np.ndarray
    z_adv: np.ndarray
    q: np.ndarray
    coarse: bool


def _adversarial_part(inst: ClassInstance, lam: QuadraticMultiplier, thetas: np.ndarray, zs: np.ndarray,
                      branch: Optional[int] = None):
    """max over the z grid of ε·λ(F(θ, z)).

    branch None uses the true margin indicator, 1 forces it off and 2 forces it
    on while keeping only z with θᵀz ≤ 1.
    """
    eta, eps = inst.eta, inst.epsilon
    A, b = lam.A, lam.b
    z_quad = eta ** 2 * np.einsum("ij,jk,ik->i", zs, A, zs) + eta * zs @ b
    best = np.empty(thetas.shape[0])
    arg = np.empty(thetas.shape[0], dtype=int)
    for start in range(0, thetas.shape[0], _CHUNK):
        chunk = thetas[start:start + _CHUNK]
        base = (1.0 - inst.sigma * eta) * chunk
        gate = (chunk @ zs.T) <= 1.0
        off = lam(base)[:, None]
        on = off + 2.0 * eta * (base @ A) @ zs.T + z_quad[None, :]
        if branch == 1:
            values = np.broadcast_to(off, on.shape)
        elif branch == 2:
            values = np.where(gate, on, -np.inf)
        else:
            values = np.where(gate, on, off)
        arg[start:start + _CHUNK] = np.argmax(values, axis=1)
        best[start:start + _CHUNK] = eps * values[np.arange(chunk.shape[0]), arg[start:start + _CHUNK]]
    return best, arg


def brute_force_inner_sup(inst: ClassInstance, A, b, resolution: int = 60,
                          branch: Optional[int] = None) -> BruteForceResult:
    """Grid θ and z_adv, enumerate the binary margin indicators, and maximize the Lagrangian.

    Each benign indicator qᵢ must satisfy 1 − θᵀzᵢ ≤ M·qᵢ and 1 − θᵀzᵢ ≥ −M·(1 − qᵢ)
    with M = 1 + 1/σ. `branch` restricts the adversarial indicator to one side
    of the case split (see _adversarial_part).
    """
    if branch not in (None, 1, 2):
        raise ContractViolation(f"branch must be 1, 2 or None, got {branch}")
    if inst.dim > MAX_DIM or inst.size > MAX_POINTS:
        raise ContractViolation(f"brute force needs d <= {MAX_DIM} and N <= {MAX_POINTS}")
    coarse = resolution < MIN_RESOLUTION
    if coarse:
        logger.warning("brute-force grid of %d points per axis is coarse", resolution)

    lam = QuadraticMultiplier(A, b)
    d, N = inst.dim, inst.size
    eta, eps = inst.eta, inst.epsilon
    Z = inst.points
    M = big_m(inst.sigma)

    thetas = Ball(np.zeros(d), 1.0 / inst.sigma).grid(resolution)
    zs = Ball(np.zeros(d), 1.0).grid(resolution)
    adv, adv_arg = _adversarial_part(inst, lam, thetas, zs, branch)

    base = (1.0 - inst.sigma * eta) * thetas
    off = lam(base)
    # λ(base + η zᵢ) for every grid θ and point i
    on = (off[:, None] + 2.0 * eta * (base @ lam.A) @ Z.T
          + (eta ** 2 * np.einsum("ij,jk,ik->i", Z, lam.A, Z) + eta * Z @ lam.b)[None, :])
    margins = thetas @ Z.T
    fixed = adv - lam(thetas)
    target_loss = None if inst.targets_are_points else inst.objective()(thetas)

    best = -np.inf
    best_idx, best_q = 0, np.zeros(N)
    for bits in itertools.product((0.0, 1.0), repeat=N):
        q = np.asarray(bits)
        slack = 1.0 - margins
        consistent = np.all((slack <= M * q + _CONSISTENCY_TOL) & (slack >= -M * (1.0 - q) - _CONSISTENCY_TOL), axis=1)
        if not np.any(consistent):
            continue
        benign = np.where(q[None, :] > 0, on, off[:, None]).mean(axis=1)
        loss = (q[None, :] * slack).mean(axis=1) if target_loss is None else target_loss
        values = np.where(consistent, fixed + (1.0 - eps) * benign + loss, -np.inf)
        idx = int(np.argmax(values))
        if values[idx] > best:
            best, best_idx, best_q = float(values[idx]), idx, q

    return BruteForceResult(
        value=best,
        theta=thetas[best_idx],
        z_adv=zs[adv_arg[best_idx]],
        q=best_q,
        coarse=coarse,
    )
