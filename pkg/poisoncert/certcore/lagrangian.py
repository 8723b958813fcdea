"""
poisoncert/certcore/lagrangian.py
Closed-form Lagrangian of the poisoning game for quadratic multipliers.

L(θ, z) = E[λ(θ') | θ, z] + ℓ_adv(θ) − λ(θ) splits into a part that does not
depend on the adversarial point and ε·E[λ(F(θ, z))], which is a quadratic in z
on each side of the hinge kink.
"""

from typing import Tuple

import numpy as np

from poisoncert.certcore.quadratic import maximize_on_ball
from poisoncert.certcore.types import (
    AdversarialObjective,
    Ball,
    ContaminatedStream,
    EmpiricalSource,
    GaussianSource,
    HingeRule,
    LearningRule,
    MeanRule,
    QuadraticMultiplier,
    check_dimensions,
)
from poisoncert.utils.exceptions import ContractViolation


class LagrangianModel:
    """Batched evaluation of L for one (λ, rule, stream, objective) combination."""

    def __init__(self, lam: QuadraticMultiplier, rule: LearningRule,
                 stream: ContaminatedStream, obj: AdversarialObjective):
        check_dimensions(rule, stream, obj, lam.dim)
        if isinstance(rule, HingeRule) and not isinstance(stream.benign, EmpiricalSource):
            raise ContractViolation("the hinge rule needs an empirical benign source")

        self.lam = lam
        self.rule = rule
        self.stream = stream
        self.obj = obj
        self.eps = stream.epsilon
        A = lam.A

        if isinstance(rule, MeanRule):
            self.shrink = 1.0 - rule.eta
            self._constant = rule.eta ** 2 * float(np.sum(A * rule.S))
            if isinstance(stream.benign, GaussianSource):
                self._constant += (1.0 - self.eps) * rule.eta ** 2 * float(np.sum(A * stream.benign.Sigma))
        else:
            self.shrink = rule.contraction
            self._constant = 0.0

        if isinstance(stream.benign, EmpiricalSource):
            Z = stream.benign.points
            self._points = Z
            self._AZ = Z @ A
            # per-point increment of λ when the point enters the update: η²zᵀAz + ηbᵀz
            self._point_const = rule.eta ** 2 * np.sum(self._AZ * Z, axis=1) + rule.eta * (Z @ lam.b)

    @property
    def dim(self) -> int:
        return self.lam.dim

    def _base(self, theta: np.ndarray) -> np.ndarray:
        """Part of the update that does not depend on the data point."""
        return self.shrink * theta

    def _benign_gates(self, theta: np.ndarray) -> np.ndarray:
        if isinstance(self.rule, HingeRule):
            return (theta @ self._points.T <= 1.0).astype(float)
        return np.ones((theta.shape[0], self._points.shape[0]))

    def rest(self, theta: np.ndarray) -> np.ndarray:
        """Everything in L except ε·E[λ(F(θ, z_adv))]; theta has shape (B, d)."""
        lam, eta = self.lam, self.rule.eta
        base = self._base(theta)
        if isinstance(self.stream.benign, GaussianSource):
            benign = lam(base + eta * self.stream.benign.mu)
        else:
            gates = self._benign_gates(theta)
            inc = 2.0 * eta * (base @ self._AZ.T) + self._point_const
            benign = lam(base) + np.mean(gates * inc, axis=1)
        return (1.0 - self.eps) * benign + self._constant + self.obj(theta) - lam(theta)

    def rest_gradient(self, theta: np.ndarray) -> np.ndarray:
        lam, eta = self.lam, self.rule.eta
        base = self._base(theta)
        if isinstance(self.stream.benign, GaussianSource):
            inner = lam.gradient(base + eta * self.stream.benign.mu)
        else:
            gates = self._benign_gates(theta)
            inner = lam.gradient(base) + 2.0 * eta * (gates @ self._AZ) / self._points.shape[0]
        grad = (1.0 - self.eps) * self.shrink * inner
        return grad + self.obj.gradient(theta) - lam.gradient(theta)

    def adversarial_term(self, theta: np.ndarray, z_adv: np.ndarray) -> np.ndarray:
        """ε·E[λ(F(θ, z_adv))] with the defense noise integrated out."""
        nxt = self._base(theta)
        if isinstance(self.rule, HingeRule):
            gate = (np.sum(theta * z_adv, axis=-1) <= 1.0)[..., None]
            nxt = nxt + self.rule.eta * gate * z_adv
        else:
            nxt = nxt + self.rule.eta * z_adv
        return self.eps * self.lam(nxt)

    def value(self, theta: np.ndarray, z_adv: np.ndarray) -> np.ndarray:
        return self.rest(theta) + self.adversarial_term(theta, z_adv)

    def adversarial_sup(self, theta: np.ndarray, adv_set: Ball) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Exact sup over z_adv of the adversarial term.

        Returns the values, the maximizing points and the gradient in θ of the
        adversarial term at those points.
        """
        lam, eta, eps = self.lam, self.rule.eta, self.eps
        base = self._base(theta)
        Q = eps * eta ** 2 * lam.A
        g = eps * eta * lam.gradient(base)
        h = eps * lam(base)

        if isinstance(self.rule, MeanRule):
            values, z_best = maximize_on_ball(Q, g, h, adv_set.center, adv_set.radius)
            grad = eps * self.shrink * lam.gradient(base + eta * z_best)
            return values, z_best, grad

        values, z_best = maximize_on_ball(Q, g, h, adv_set.center, adv_set.radius,
                                          normal=theta, offset=1.0)
        grad = eps * self.shrink * lam.gradient(base + eta * z_best)

        # inactive branch: some z in the set has θᵀz > 1, the update ignores z
        norm = np.linalg.norm(theta, axis=1)
        reach = theta @ adv_set.center + adv_set.radius * norm
        idle = np.where(reach > 1.0, h, -np.inf)
        use_idle = idle > values
        if np.any(use_idle):
            direction = theta / np.maximum(norm, 1e-300)[:, None]
            z_idle = adv_set.center + adv_set.radius * direction
            values = np.where(use_idle, idle, values)
            z_best = np.where(use_idle[:, None], z_idle, z_best)
            grad = np.where(use_idle[:, None], eps * self.shrink * lam.gradient(base), grad)
        return values, z_best, grad

    def sup_over_adversary(self, theta: np.ndarray, adv_set: Ball) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sup_z L(θ, z), argmax z, gradient in θ) for a batch of θ."""
        values, z_best, grad = self.adversarial_sup(theta, adv_set)
        return self.rest(theta) + values, z_best, self.rest_gradient(theta) + grad


def lagrangian_value(lam: QuadraticMultiplier, theta, z_adv, rule: LearningRule,
                     stream: ContaminatedStream, obj: AdversarialObjective) -> float:
    """E_{θ'}[λ(θ')] + ℓ_adv(θ) − λ(θ) at a single (θ, z_adv), in closed form."""
    model = LagrangianModel(lam, rule, stream, obj)
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    z_adv = np.asarray(z_adv, dtype=float).reshape(1, -1)
    if theta.shape[1] != lam.dim or z_adv.shape[1] != lam.dim:
        raise ContractViolation("theta and z_adv must match the multiplier dimension")
    return float(model.value(theta, z_adv)[0])
