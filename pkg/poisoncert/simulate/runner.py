"""
poisoncert/simulate/runner.py
Poisoned online learning: each step is a poisoned point with probability ε,
otherwise a benign draw, followed by one application of the learning rule.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from poisoncert.certcore.dynamics import apply_update
from poisoncert.certcore.types import (
    AdversarialObjective,
    Ball,
    ContaminatedStream,
    EmpiricalSource,
    GaussianSource,
    HingeRule,
    LearningRule,
    SquaredDistance,
)
from poisoncert.simulate.attacks import AttackContext, AttackPolicy
from poisoncert.utils.exceptions import ContractViolation, SimulationError

logger = logging.getLogger(__name__)

_LOSS_CHUNK = 65536
_NORM_SLACK = 1e-9


@dataclass
class Trajectory:
    """One poisoned run; `thetas` is kept only when recording was requested."""
    avg_adv_loss: float
    avg_benign_loss: float
    seed: int
    T: int
    burn_in: int
    policy: str
    poisoned_steps: int
    max_norm: float
    final_theta: np.ndarray
    thetas: Optional[np.ndarray] = None
    config_key: Tuple = field(default=(), repr=False)


def default_adversarial_set(obj: AdversarialObjective, dim: int, r: float = 1.0) -> Ball:
    """Budget ball around μ for the mean objective, the unit ball otherwise."""
    if isinstance(obj, SquaredDistance):
        return Ball(obj.mu, np.sqrt(r))
    return Ball(np.zeros(dim), 1.0)


def benign_objective(rule: LearningRule, stream: ContaminatedStream):
    """Expected training loss on clean data, batched over θ."""
    benign = stream.benign
    if isinstance(rule, HingeRule):
        if not isinstance(benign, EmpiricalSource):
            raise ContractViolation("the hinge rule trains on an empirical source")
        points = benign.points

        def regularized_hinge(thetas):
            margins = np.maximum(1.0 - thetas @ points.T, 0.0).mean(axis=1)
            return 0.5 * rule.sigma * np.einsum("ij,ij->i", thetas, thetas) + margins

        return regularized_hinge

    if isinstance(benign, GaussianSource):
        spread = float(np.trace(benign.Sigma))
        center = benign.mu
    else:
        center = benign.points.mean(axis=0)
        spread = float(np.mean(np.sum((benign.points - center) ** 2, axis=1)))

    def squared_error(thetas):
        diff = thetas - center
        return np.einsum("ij,ij->i", diff, diff) + spread

    return squared_error


def _chunked_mean(fn, thetas: np.ndarray) -> float:
    if thetas.shape[0] == 0:
        return 0.0
    total = 0.0
    for start in range(0, thetas.shape[0], _LOSS_CHUNK):
        total += float(np.sum(fn(thetas[start:start + _LOSS_CHUNK])))
    return total / thetas.shape[0]


def run_online(rule: LearningRule, stream: ContaminatedStream, obj: AdversarialObjective, policy: AttackPolicy,
               T: int, burn_in: int, seed: int, theta0=None, adv_set: Optional[Ball] = None,
               record: bool = False) -> Trajectory:
    """Simulate T steps and average ℓ_adv(θ_t) over t = burn_in, ..., T − 1.

    Raises:
        ContractViolation: bad horizon or a start outside the hinge norm ball
        SimulationError: the policy or the update produced a non-finite or infeasible point
    """
    if not 0 <= burn_in < T:
        raise ContractViolation(f"need T > burn_in >= 0, got T={T}, burn_in={burn_in}")
    dim = stream.dim
    theta = np.zeros(dim) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta.shape != (dim,):
        raise ContractViolation(f"theta0 must have length {dim}")
    if isinstance(rule, HingeRule) and np.linalg.norm(theta) > rule.radius + _NORM_SLACK:
        raise ContractViolation("hinge trajectories must start inside the 1/sigma ball")
    adv_set = adv_set or default_adversarial_set(obj, dim)

    data_seq, attack_seq = np.random.SeedSequence(seed).spawn(2)
    data_rng = np.random.default_rng(data_seq)
    poisoned = data_rng.random(T) < stream.epsilon
    benign_draws = stream.benign.sample(data_rng, T)
    propose = policy.bind(AttackContext(rule, stream, obj, adv_set), np.random.default_rng(attack_seq))
    if propose is None:
        poisoned[:] = False

    thetas = np.empty((T, dim))
    for t in range(T):
        thetas[t] = theta
        if poisoned[t]:
            z = np.asarray(propose(theta), dtype=float)
            if z.shape != (dim,) or not np.all(np.isfinite(z)):
                raise SimulationError(f"policy {policy.name} returned a non-finite point", t)
            z = adv_set.project(z)
            if not adv_set.contains(z):
                raise SimulationError("injected point left the adversarial set", t)
        else:
            z = benign_draws[t]
        theta = apply_update(rule, theta, z, data_rng)
        if not np.all(np.isfinite(theta)):
            raise SimulationError("learner state became non-finite", t)

    window = thetas[burn_in:]
    avg_adv = _chunked_mean(obj, window)
    avg_benign = _chunked_mean(benign_objective(rule, stream), window)
    max_norm = float(max(np.max(np.linalg.norm(thetas, axis=1)), np.linalg.norm(theta)))
    logger.debug("seed %d, %s: avg adversarial loss %.6g over %d steps", seed, policy.name, avg_adv, T - burn_in)
    return Trajectory(
        avg_adv_loss=avg_adv,
        avg_benign_loss=avg_benign,
        seed=seed,
        T=T,
        burn_in=burn_in,
        policy=policy.name,
        poisoned_steps=int(poisoned.sum()),
        max_norm=max_norm,
        final_theta=theta,
        thetas=np.vstack([thetas, theta]) if record else None,
        config_key=(type(rule).__name__, stream.epsilon, policy, T, burn_in),
    )


def run_many(rule: LearningRule, stream: ContaminatedStream, obj: AdversarialObjective, policy: AttackPolicy,
             T: int, burn_in: int, seeds: Sequence[int], theta0=None, adv_set: Optional[Ball] = None,
             threads: int = 0, record: bool = False) -> List[Trajectory]:
    """Independent runs over `seeds` in a thread pool, returned in seed order."""
    workers = threads if threads > 0 else None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_online, rule, stream, obj, policy, T, burn_in, seed, theta0, adv_set, record)
                   for seed in seeds]
        return [f.result() for f in futures]


def estimate_avg_reward(runs: Sequence[Trajectory]) -> Tuple[float, float]:
    """Mean and standard error of the per-run average adversarial loss."""
    if len(runs) < 2:
        raise ContractViolation("need at least two runs to estimate a standard error")
    keys = {repr(run.config_key) for run in runs}
    if len(keys) != 1:
        raise ContractViolation("runs differ in configuration beyond the seed")
    values = np.array([run.avg_adv_loss for run in runs])
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def dump_thetas(trajectory: Trajectory, path: Path) -> Path:
    """Write the recorded θ sequence as CSV (step, theta0, theta1, ...)."""
    if trajectory.thetas is None:
        raise ContractViolation("trajectory was run without recording")
    path = Path(path)
    frame = pd.DataFrame(trajectory.thetas, columns=[f"theta{i}" for i in range(trajectory.thetas.shape[1])])
    frame.insert(0, "step", np.arange(frame.shape[0]))
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path
