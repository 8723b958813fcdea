"""
poisoncert/certcore/verify.py
Independent verification of a quadratic multiplier.

Any multiplier λ yields a valid bound sup_{θ,z} L(θ, z); the search here
approximates that supremum directly, so the reported number does not depend on
whichever solver produced λ.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from poisoncert.certcore.lagrangian import LagrangianModel
from poisoncert.certcore.types import (
    AdversarialObjective,
    Ball,
    ContaminatedStream,
    Domain,
    EmpiricalSource,
    LearningRule,
    QuadraticMultiplier,
)
from poisoncert.config.settings import SearchSettings
from poisoncert.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 40
_STARTS_FROM_GRID = 8
_POINT_BUDGET = 2_000_000


@dataclass
class Verification:
    """Outcome of the verification search."""
    bound: float
    best_value: float
    theta: np.ndarray
    z_adv: np.ndarray
    converged: bool
    evaluations: int

    def __float__(self) -> float:
        return self.bound


def inflate(value: float, search: SearchSettings) -> float:
    """Apply the floating-point safety margin."""
    return value + abs(value) * search.safety_factor + search.safety_offset


def _domain_size(domain: Domain) -> float:
    if isinstance(domain, Ball):
        return max(domain.radius, 1e-12)
    return max(float(np.max(domain.upper - domain.lower)), 1e-12)


class _Evaluator:
    """Chunked sup_z L(θ, z) with a running maximum."""

    def __init__(self, model: LagrangianModel, adv_set: Ball, batch_size: int):
        self.model = model
        self.adv_set = adv_set
        self.batch_size = batch_size
        self.count = 0
        self.best_value = -np.inf
        self.best_theta = None
        self.best_z = None

    def __call__(self, thetas: np.ndarray):
        values, zs, grads = [], [], []
        for start in range(0, thetas.shape[0], self.batch_size):
            v, z, g = self.model.sup_over_adversary(thetas[start:start + self.batch_size], self.adv_set)
            values.append(v)
            zs.append(z)
            grads.append(g)
        values = np.concatenate(values)
        zs = np.concatenate(zs)
        grads = np.concatenate(grads)
        self.count += thetas.shape[0]

        if values.size:
            i = int(np.argmax(values))
            if values[i] > self.best_value:
                self.best_value = float(values[i])
                self.best_theta = thetas[i].copy()
                self.best_z = zs[i].copy()
        return values, zs, grads


def _ascend(evaluate: _Evaluator, domain: Domain, starts: np.ndarray, search: SearchSettings) -> bool:
    """Projected gradient ascent from every start; True when all runs converged."""
    thetas = domain.project(starts)
    values, _, grads = evaluate(thetas)
    size = _domain_size(domain)
    steps = 0.1 * size / np.maximum(np.linalg.norm(grads, axis=1), 1e-12)
    active = np.isfinite(values)
    converged = ~active

    for _ in range(search.max_ascent_iterations):
        if not active.any():
            break
        pending = np.flatnonzero(active)
        for _ in range(_MAX_BACKTRACKS):
            if pending.size == 0:
                break
            theta, grad = thetas[pending], grads[pending]
            cand = domain.project(theta + steps[pending, None] * grad)
            moved = cand - theta
            cand_values, _, cand_grads = evaluate(cand)
            accept = cand_values >= values[pending] + _ARMIJO * np.sum(grad * moved, axis=1)

            done = pending[accept]
            thetas[done] = cand[accept]
            values[done] = cand_values[accept]
            grads[done] = cand_grads[accept]

            # projected-gradient mapping measured at the step that was taken
            mapping = np.linalg.norm(moved[accept], axis=1) / steps[done]
            stationary = mapping <= search.gradient_tol * np.maximum(1.0, np.abs(cand_values[accept]))
            converged[done[stationary]] = True
            active[done[stationary]] = False
            steps[done] = np.minimum(steps[done] * 2.0, 1e3 * size)

            pending = pending[~accept]
            steps[pending] *= 0.5

        # line search exhausted: a kink or a stationary point
        converged[pending] = True
        active[pending] = False

    return bool(converged.all())


def verify_certificate(lam: QuadraticMultiplier, rule: LearningRule, stream: ContaminatedStream,
                       obj: AdversarialObjective, domain: Domain, adv_set: Ball,
                       search: Optional[SearchSettings] = None,
                       anchors: Optional[np.ndarray] = None) -> Verification:
    """Approximate sup over (θ, z_adv) of the Lagrangian and inflate it.

    Args:
        lam: Candidate multiplier
        rule: Learning rule under attack
        stream: Contaminated data stream
        obj: Adversary objective
        domain: Compact set searched for θ
        adv_set: Ball of admissible adversarial points
        search: Search budget, defaults to SearchSettings()
        anchors: Extra θ points that are always evaluated

    Returns:
        Verification whose bound dominates every evaluated point
    """
    search = search or SearchSettings()
    if domain.dim != lam.dim or adv_set.dim != lam.dim:
        raise ContractViolation("domain and adversarial set must match the multiplier dimension")

    model = LagrangianModel(lam, rule, stream, obj)
    batch = search.batch_size
    if isinstance(stream.benign, EmpiricalSource):
        batch = max(16, min(batch, _POINT_BUDGET // stream.benign.size))
    evaluate = _Evaluator(model, adv_set, batch)
    rng = np.random.default_rng(search.seed)

    starts = domain.sample(rng, search.restarts)
    if lam.dim <= search.grid_max_dim:
        grid = domain.grid(search.grid_points_per_axis)
        grid_values, _, _ = evaluate(grid)
        top = np.argsort(grid_values)[-_STARTS_FROM_GRID:]
        starts = np.concatenate([grid[top], starts])
    if anchors is not None:
        anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        evaluate(anchors)

    converged = _ascend(evaluate, domain, starts, search)
    if not converged:
        logger.warning("verification search hit its iteration budget; best value %.6g", evaluate.best_value)

    best = evaluate.best_value
    logger.debug("verified sup %.9g after %d evaluations", best, evaluate.count)
    return Verification(
        bound=inflate(best, search),
        best_value=best,
        theta=evaluate.best_theta,
        z_adv=evaluate.best_z,
        converged=converged,
        evaluations=evaluate.count,
    )


def default_mean_domain(mu: np.ndarray, r: float) -> Ball:
    """θ domain for the mean problem: ball of radius 10(‖μ‖ + √r) around μ."""
    mu = np.asarray(mu, dtype=float)
    return Ball(mu, 10.0 * (np.linalg.norm(mu) + np.sqrt(r)))


def hinge_domain(rule, dim: int) -> Ball:
    return Ball(np.zeros(dim), rule.radius)


__all__ = ["Verification", "verify_certificate", "inflate", "default_mean_domain", "hinge_domain"]
