"""
poisoncert/meta/evaluation.py
Held-out evaluation of a defense covariance and κ selection.
"""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from poisoncert.certcore.dynamics import noise_covariance
from poisoncert.certificates.mean import MeanInstance, stationary_covariance_candidates
from poisoncert.config.settings import SolverSettings
from poisoncert.meta.training import MetaConfig, MetaTrace, Task, meta_train
from poisoncert.simulate.attacks import AttackPolicy, NoAttack
from poisoncert.simulate.runner import run_many
from poisoncert.utils.validation import as_psd

logger = logging.getLogger(__name__)


def eval_defense_per_task(S, test_tasks: Sequence[Task], eta: float, epsilon: float, r: float,
                          attack: AttackPolicy, T: int = 5000, burn_in: int = 1000, seeds: int = 2, seed: int = 0,
                          threads: int = 0) -> np.ndarray:
    """Seed-averaged time-averaged ‖μ − θ‖² for every test task."""
    S = as_psd(S, "S")
    per_task = []
    for index, (mu, Sigma) in enumerate(test_tasks):
        inst = MeanInstance(mu, Sigma, eta, S, epsilon, r)
        runs = run_many(inst.rule(), inst.stream(), inst.objective(), attack, T, burn_in,
                        [seed + index * seeds + s for s in range(seeds)], theta0=inst.mu,
                        adv_set=inst.adversarial_set(), threads=threads)
        per_task.append(np.mean([run.avg_adv_loss for run in runs]))
    return np.asarray(per_task)


def eval_defense(S, test_tasks: Sequence[Task], eta: float, epsilon: float, r: float, attack: AttackPolicy,
                 **simulation) -> float:
    """Mean over test tasks of the simulated time-averaged ‖μ − θ‖² under `attack`."""
    return float(np.mean(eval_defense_per_task(S, test_tasks, eta, epsilon, r, attack, **simulation)))


def observed_stationary_covariance(mu, Sigma, eta: float, S, T: int = 20000, burn_in: int = 2000,
                                   seed: int = 0) -> Dict[str, np.ndarray]:
    """Empirical benign stationary covariance next to both closed-form candidates, logged at INFO."""
    inst = MeanInstance(mu, Sigma, eta, S, 0.0)
    (run,) = run_many(inst.rule(), inst.stream(), inst.objective(), NoAttack(), T, burn_in, [seed],
                      theta0=inst.mu, record=True)
    observed = np.atleast_2d(np.cov(run.thetas[burn_in:].T))
    report = dict(stationary_covariance_candidates(eta, inst.Sigma, inst.S))
    report["observed"] = observed
    report["defense_noise_per_step"] = noise_covariance(inst.rule())
    logger.info("stationary covariance trace: observed %.4g, quoted %.4g, fixed point %.4g",
                np.trace(observed), np.trace(report["quoted"]), np.trace(report["fixed_point"]))
    return report


def select_kappa(kappas: Sequence[float], train_tasks: Sequence[Task], validation_tasks: Sequence[Task],
                 eta: float, epsilon: float, r: float, attack: AttackPolicy, cfg: Optional[MetaConfig] = None,
                 solver: Optional[SolverSettings] = None, **simulation) -> Tuple[float, Dict[float, float],
                                                                                Dict[float, MetaTrace]]:
    """Train once per κ and keep the κ with the lowest simulated validation loss."""
    cfg = cfg or MetaConfig()
    losses: Dict[float, float] = {}
    traces: Dict[float, MetaTrace] = {}
    for kappa in kappas:
        trace = meta_train(train_tasks, eta, epsilon, r, cfg.model_copy(update={"kappa": kappa}), solver)
        traces[kappa] = trace
        losses[kappa] = eval_defense(trace.S, validation_tasks, eta, epsilon, r, attack, **simulation)
        logger.info("kappa %.4g: validation loss %.6g", kappa, losses[kappa])
    best = min(losses, key=losses.get)
    return best, losses, traces
