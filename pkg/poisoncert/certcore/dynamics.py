"""
poisoncert/certcore/dynamics.py
The learning-rule update maps θ' = F(θ, z).
"""

from typing import Optional

import numpy as np

from poisoncert.certcore.types import HingeRule, LearningRule, MeanRule
from poisoncert.utils.exceptions import ContractViolation


def hinge_active(theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Indicator 𝕀[θᵀz ≤ 1], active at equality."""
    return np.einsum("...i,...i->...", theta, z) <= 1.0


def deterministic_update(rule: LearningRule, theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Noise-free part of the update; broadcasts over leading axes."""
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=float)
    if isinstance(rule, MeanRule):
        return (1.0 - rule.eta) * theta + rule.eta * z
    if isinstance(rule, HingeRule):
        gate = hinge_active(theta, z)[..., None]
        return rule.contraction * theta + rule.eta * gate * z
    raise ContractViolation(f"unsupported learning rule {type(rule).__name__}")


def apply_update(rule: LearningRule, theta: np.ndarray, z: np.ndarray,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Full stochastic update, drawing the defense noise when the rule has any."""
    nxt = deterministic_update(rule, theta, z)
    if isinstance(rule, MeanRule) and rng is not None and np.any(rule.S):
        noise = rng.standard_normal(np.shape(nxt))
        nxt = nxt + rule.eta * noise @ rule.B.T
    return nxt


def noise_covariance(rule: LearningRule) -> np.ndarray:
    """Covariance added by the defense noise in one step."""
    if isinstance(rule, MeanRule):
        return rule.eta ** 2 * rule.S
    raise ContractViolation("only the mean rule injects noise")
