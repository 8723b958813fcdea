"""
poisoncert/simulate/attacks.py
Dynamic adversary policies. Every policy sees the learner's current θ.

Gradient attacks ascend the lookahead loss z ↦ ℓ_adv(F^h(θ, z)), where F^h
applies the noise-free update h times with the same poisoned point. Both
learning rules give ∂θ_h/∂z = c·I for a scalar c (hinge gates are piecewise
constant), so the lookahead gradient is c·∇ℓ_adv(θ_h).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from poisoncert.certcore.dynamics import hinge_active
from poisoncert.certcore.types import (
    AdversarialObjective,
    Ball,
    ContaminatedStream,
    HingeRule,
    LearningRule,
    MeanRule,
)
from poisoncert.utils.exceptions import ContractViolation

logger = logging.getLogger(__name__)

Proposal = Callable[[np.ndarray], np.ndarray]
SeedLike = Union[int, np.random.Generator, None]


@dataclass(frozen=True)
class AttackContext:
    rule: LearningRule
    stream: ContaminatedStream
    obj: AdversarialObjective
    adv_set: Ball


def lookahead(theta: np.ndarray, z: np.ndarray, rule: LearningRule, horizon: int = 1):
    """(θ_h, c) with θ_h the h-step noise-free rollout and c the scalar Jacobian ∂θ_h/∂z."""
    theta = np.asarray(theta, dtype=float)
    jac = 0.0
    for _ in range(horizon):
        if isinstance(rule, MeanRule):
            theta = (1.0 - rule.eta) * theta + rule.eta * z
            jac = (1.0 - rule.eta) * jac + rule.eta
        elif isinstance(rule, HingeRule):
            gate = float(hinge_active(theta, z))
            theta = rule.contraction * theta + rule.eta * gate * z
            jac = rule.contraction * jac + rule.eta * gate
        else:
            raise ContractViolation(f"unsupported learning rule {type(rule).__name__}")
    return theta, jac


def lookahead_loss(theta, z, rule: LearningRule, obj: AdversarialObjective, horizon: int = 1) -> float:
    rolled, _ = lookahead(theta, np.asarray(z, dtype=float), rule, horizon)
    return float(obj(rolled))


def _ascent_direction(theta, z, rule, obj, horizon) -> np.ndarray:
    rolled, jac = lookahead(theta, z, rule, horizon)
    grad = jac * obj.gradient(rolled)
    norm = np.linalg.norm(grad)
    return grad / norm if norm > 0 else np.zeros_like(grad)


def _generator(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def pgd_attack(theta, rule: LearningRule, obj: AdversarialObjective, steps: int, step: float,
               adv_set: Optional[Ball] = None, rng: SeedLike = None, horizon: int = 1) -> np.ndarray:
    """Random start in the adversarial ball, then `steps` normalized ascent steps with projection."""
    theta = np.asarray(theta, dtype=float)
    adv_set = adv_set or Ball(np.zeros(theta.shape[0]), 1.0)
    z = adv_set.sample(_generator(rng), 1)[0]
    for _ in range(steps):
        direction = _ascent_direction(theta, z, rule, obj, horizon)
        if not np.any(direction):
            break
        z = adv_set.project(z + step * direction)
    return z


def fgsm_attack(theta, rule: LearningRule, obj: AdversarialObjective, step: float,
                adv_set: Optional[Ball] = None, rng: SeedLike = None, horizon: int = 1) -> np.ndarray:
    """A single projected ascent step from a random start; zero gradient returns the start."""
    return pgd_attack(theta, rule, obj, 1, step, adv_set, rng, horizon)


def label_flip_attack(stream: ContaminatedStream, rng: SeedLike = None) -> np.ndarray:
    """−z for a fresh benign draw z."""
    return -stream.benign.sample(_generator(rng), 1)[0]


def greedy_best_response_mean(theta, mu, r: float, eta: float) -> np.ndarray:
    """Point of the budget ball pushing θ furthest from μ in expectation.

    E‖μ − F(θ, z)‖² grows with ‖(1 − η)(θ − μ) + η(z − μ)‖², maximized on the sphere
    along θ − μ; at θ = μ the first coordinate axis is used.
    """
    if r <= 0:
        raise ContractViolation("adversary budget r must be positive")
    theta = np.asarray(theta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    offset = theta - mu
    norm = np.linalg.norm(offset)
    if norm == 0.0:
        direction = np.zeros_like(mu)
        direction[0] = 1.0
    else:
        direction = offset / norm
    return mu + np.sqrt(r) * direction


@dataclass(frozen=True)
class NoAttack:
    name: str = "none"

    def bind(self, ctx: AttackContext, rng: np.random.Generator) -> Optional[Proposal]:
        return None


@dataclass(frozen=True)
class LabelFlip:
    fixed: bool = False

    @property
    def name(self) -> str:
        return "label_flip_fixed" if self.fixed else "label_flip"

    def bind(self, ctx: AttackContext, rng: np.random.Generator) -> Proposal:
        if self.fixed:
            point = label_flip_attack(ctx.stream, rng)
            return lambda theta: point
        return lambda theta: label_flip_attack(ctx.stream, rng)


def _check_gradient_params(step: float, steps: int, horizon: int) -> None:
    if step <= 0:
        raise ContractViolation("attack step must be positive")
    if steps < 1:
        raise ContractViolation("attack needs at least one step")
    if horizon < 1:
        raise ContractViolation("lookahead horizon must be at least 1")


@dataclass(frozen=True)
class Fgsm:
    step: float = 1.0
    horizon: int = 1

    def __post_init__(self):
        _check_gradient_params(self.step, 1, self.horizon)

    @property
    def name(self) -> str:
        return "fgsm"

    def bind(self, ctx: AttackContext, rng: np.random.Generator) -> Proposal:
        return lambda theta: fgsm_attack(theta, ctx.rule, ctx.obj, self.step, ctx.adv_set, rng, self.horizon)


@dataclass(frozen=True)
class Pgd:
    steps: int = 20
    step: float = 0.1
    horizon: int = 1

    def __post_init__(self):
        _check_gradient_params(self.step, self.steps, self.horizon)

    @property
    def name(self) -> str:
        return "pgd"

    def bind(self, ctx: AttackContext, rng: np.random.Generator) -> Proposal:
        return lambda theta: pgd_attack(theta, ctx.rule, ctx.obj, self.steps, self.step, ctx.adv_set, rng,
                                        self.horizon)


@dataclass(frozen=True)
class GreedyBestResponse:
    name: str = "greedy"

    def bind(self, ctx: AttackContext, rng: np.random.Generator) -> Proposal:
        if not isinstance(ctx.rule, MeanRule):
            raise ContractViolation("the greedy best response is defined for the mean rule only")
        r = ctx.adv_set.radius ** 2
        mu = ctx.adv_set.center
        return lambda theta: greedy_best_response_mean(theta, mu, r, ctx.rule.eta)


AttackPolicy = Union[NoAttack, LabelFlip, Fgsm, Pgd, GreedyBestResponse]

POLICY_NAMES = ("none", "label_flip", "label_flip_fixed", "fgsm", "pgd", "greedy")


def parse_policy(name: str, step: Optional[float] = None, steps: Optional[int] = None,
                 horizon: int = 1) -> AttackPolicy:
    """Build a policy from its command-line name."""
    key = name.strip().lower().replace("-", "_")
    if key == "none":
        return NoAttack()
    if key == "label_flip":
        return LabelFlip()
    if key == "label_flip_fixed":
        return LabelFlip(fixed=True)
    if key == "fgsm":
        return Fgsm(step=step or 1.0, horizon=horizon)
    if key == "pgd":
        return Pgd(steps=steps or 20, step=step or 0.1, horizon=horizon)
    if key == "greedy":
        return GreedyBestResponse()
    raise ContractViolation(f"unknown attack '{name}'; choose from {', '.join(POLICY_NAMES)}")
