"""
poisoncert/certcore/__init__.py
Dual-certificate machinery shared by the mean and classification certificates.
"""

from poisoncert.certcore.lagrangian import LagrangianModel, lagrangian_value
from poisoncert.certcore.mdp import (
    DiscretizedMDP,
    build_discretized_mdp,
    discrete_dual_bound,
    relative_value_iteration,
    solve_discretized_mdp,
    state_gains,
    weak_duality_gap,
)
from poisoncert.certcore.types import (
    Ball,
    Box,
    ContaminatedStream,
    EmpiricalSource,
    GaussianSource,
    HingeOnTarget,
    HingeRule,
    MeanRule,
    QuadraticMultiplier,
    SquaredDistance,
)
from poisoncert.certcore.verify import Verification, verify_certificate

__all__ = [
    "Ball",
    "Box",
    "ContaminatedStream",
    "DiscretizedMDP",
    "EmpiricalSource",
    "GaussianSource",
    "HingeOnTarget",
    "HingeRule",
    "LagrangianModel",
    "MeanRule",
    "QuadraticMultiplier",
    "SquaredDistance",
    "Verification",
    "build_discretized_mdp",
    "discrete_dual_bound",
    "relative_value_iteration",
    "lagrangian_value",
    "solve_discretized_mdp",
    "state_gains",
    "verify_certificate",
    "weak_duality_gap",
]
