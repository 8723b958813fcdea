"""
poisoncert/simulate/__init__.py
Poisoned online learning simulations.
"""

from poisoncert.simulate.attacks import (
    AttackPolicy,
    Fgsm,
    GreedyBestResponse,
    LabelFlip,
    NoAttack,
    Pgd,
    fgsm_attack,
    greedy_best_response_mean,
    label_flip_attack,
    parse_policy,
    pgd_attack,
)
from poisoncert.simulate.runner import Trajectory, dump_thetas, estimate_avg_reward, run_many, run_online

__all__ = [
    "AttackPolicy",
    "Fgsm",
    "GreedyBestResponse",
    "LabelFlip",
    "NoAttack",
    "Pgd",
    "Trajectory",
    "dump_thetas",
    "estimate_avg_reward",
    "fgsm_attack",
    "greedy_best_response_mean",
    "label_flip_attack",
    "parse_policy",
    "pgd_attack",
    "run_many",
    "run_online",
]
