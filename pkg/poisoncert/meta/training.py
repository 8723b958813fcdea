"""
poisoncert/meta/training.py
Alternating minimization for the defense covariance S.

The criterion is (κ/K)·Σᵢ g(Aᵢ, bᵢ, νᵢ, S; μᵢ, Σᵢ) + η²Tr(S). For fixed S the
per-task multipliers are independent certificate programs; for fixed
multipliers g is affine in S, so the S-step is a linear program over
{S ⪰ 0, Tr(S) ≤ cap}.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from poisoncert.certificates.mean import MeanDualPoint, MeanInstance, solve_mean_dual
from poisoncert.config.settings import SolverSettings
from poisoncert.meta.priors import TaskPrior, sample_tasks
from poisoncert.sdp import ProgramBuilder, solve
from poisoncert.utils.exceptions import ContractViolation, InfeasibleProgram

logger = logging.getLogger(__name__)

Task = Tuple[np.ndarray, np.ndarray]
_CROSS_CHECK_TOL = 1e-5


class MetaConfig(BaseModel):
    kappa: float = Field(default=1.0, gt=0.0)
    T: int = Field(default=10, ge=1)
    K: int = Field(default=10, ge=1)
    seed: int = 0
    prior: Optional[TaskPrior] = None
    trace_cap: float = Field(default=1e3, gt=0.0)
    structure: Literal["full", "isotropic"] = "full"
    threads: int = Field(default=0, ge=0)


@dataclass
class MetaTrace:
    """Criterion values after each S-step, plus the values right after each multiplier step."""
    objectives: List[float] = field(default_factory=list)
    multiplier_objectives: List[float] = field(default_factory=list)
    S: Optional[np.ndarray] = None
    cap_active: List[bool] = field(default_factory=list)
    duals: List[MeanDualPoint] = field(default_factory=list)
    structure: str = "full"
    kappa: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "objectives": [float(v) for v in self.objectives],
            "multiplier_objectives": [float(v) for v in self.multiplier_objectives],
            "S": None if self.S is None else self.S.tolist(),
            "trace_S": None if self.S is None else float(np.trace(self.S)),
            "cap_active": list(self.cap_active),
            "structure": self.structure,
            "kappa": self.kappa,
        }


def initial_defense(d: int, seed: int, structure: str = "full") -> np.ndarray:
    """Wishart(I, d) draw rescaled to trace d; the isotropic start is I."""
    if structure == "isotropic":
        return np.eye(d)
    draw = stats.wishart.rvs(df=d, scale=np.eye(d), random_state=np.random.default_rng(seed))
    S = np.atleast_2d(np.asarray(draw, dtype=float))
    S = 0.5 * (S + S.T)
    return S * (d / np.trace(S))


def _solve_tasks(tasks: Sequence[Task], S: np.ndarray, eta: float, epsilon: float, r: float,
                 solver: Optional[SolverSettings], threads: int) -> Tuple[List[MeanDualPoint], np.ndarray]:
    def one(index: int):
        mu, Sigma = tasks[index]
        try:
            return solve_mean_dual(MeanInstance(mu, Sigma, eta, S, epsilon, r), solver)
        except InfeasibleProgram as exc:
            raise InfeasibleProgram(f"task {index}: {exc}", exc.status, task_index=index) from exc

    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        results = list(pool.map(one, range(len(tasks))))
    return [dual for dual, _ in results], np.array([sol.objective_value for _, sol in results])


def defense_cost(duals: Sequence[MeanDualPoint], kappa: float, eta: float) -> np.ndarray:
    """C with criterion(S) = const + ⟨C, S⟩ for fixed multipliers."""
    d = duals[0].A.shape[0]
    return (kappa / len(duals)) * eta ** 2 * sum(dual.A for dual in duals) + eta ** 2 * np.eye(d)


def closed_form_defense_step(cost: np.ndarray, cap: float, structure: str = "full") -> np.ndarray:
    """Minimizer of ⟨C, S⟩ over the capped PSD set (or over S = sI)."""
    d = cost.shape[0]
    if structure == "isotropic":
        return np.eye(d) * (cap / d if np.trace(cost) < 0 else 0.0)
    w, V = np.linalg.eigh(0.5 * (cost + cost.T))
    if w[0] >= 0:
        return np.zeros((d, d))
    return cap * np.outer(V[:, 0], V[:, 0])


def solve_defense_step(cost: np.ndarray, cap: float, structure: str = "full",
                       solver: Optional[SolverSettings] = None) -> np.ndarray:
    """Interior-point solve of the S-step, cross-checked against the closed form."""
    d = cost.shape[0]
    builder = ProgramBuilder(f"defense-step({structure}, d={d})")
    if structure == "isotropic":
        s = builder.variable("s", nonneg=True)
        builder.add_nonneg(cap / d - s)
        builder.minimize(float(np.trace(cost)) * s)
    else:
        S_var = builder.variable("S", (d, d), symmetric=True)
        builder.add_psd(S_var)
        builder.add_nonneg(cap - S_var.trace())
        builder.minimize(S_var.inner(cost))
    solution = solve(builder.build(), solver)

    if structure == "isotropic":
        S = max(float(solution.value("s")), 0.0) * np.eye(d)
    else:
        w, V = np.linalg.eigh(0.5 * (solution.value("S") + solution.value("S").T))
        S = (V * np.maximum(w, 0.0)) @ V.T

    reference = closed_form_defense_step(cost, cap, structure)
    ours, best = float(np.sum(cost * S)), float(np.sum(cost * reference))
    if ours > best + _CROSS_CHECK_TOL * (1.0 + abs(best)):
        logger.warning("defense step: solver value %.6g above closed form %.6g; using the closed form", ours, best)
        return reference
    return S


def _criterion(task_values: np.ndarray, kappa: float, eta: float, S: np.ndarray) -> float:
    return float(kappa * task_values.mean() + eta ** 2 * np.trace(S))


def training_tasks(cfg: MetaConfig) -> List[Task]:
    """cfg.K tasks drawn from cfg.prior under cfg.seed."""
    if cfg.prior is None:
        raise ContractViolation("drawing training tasks needs a task prior in the meta config")
    return sample_tasks(cfg.prior, cfg.K, cfg.seed)


def meta_train(tasks: Optional[Sequence[Task]], eta: float, epsilon: float, r: float, cfg: MetaConfig,
               solver: Optional[SolverSettings] = None) -> MetaTrace:
    """Alternate multiplier solves and S-steps for cfg.T rounds.

    With tasks None the training set is training_tasks(cfg).
    """
    if tasks is None:
        tasks = training_tasks(cfg)
    if not tasks:
        raise ValueError("meta training needs at least one task")
    d = np.asarray(tasks[0][0]).shape[0]
    S = initial_defense(d, cfg.seed, cfg.structure)
    trace = MetaTrace(structure=cfg.structure, kappa=cfg.kappa)

    for iteration in range(cfg.T):
        duals, values = _solve_tasks(tasks, S, eta, epsilon, r, solver, cfg.threads)
        trace.multiplier_objectives.append(_criterion(values, cfg.kappa, eta, S))

        cost = defense_cost(duals, cfg.kappa, eta)
        S_next = solve_defense_step(cost, cfg.trace_cap, cfg.structure, solver)
        # g is affine in S with slope η²Aᵢ, so the task values move exactly by ⟨η²Aᵢ, ΔS⟩
        shift = np.array([eta ** 2 * np.sum(dual.A * (S_next - S)) for dual in duals])
        S = S_next
        trace.objectives.append(_criterion(values + shift, cfg.kappa, eta, S))

        active = np.trace(S) >= cfg.trace_cap * (1.0 - 1e-6)
        trace.cap_active.append(bool(active))
        if active:
            logger.warning("iteration %d: trace cap %.3g is active", iteration + 1, cfg.trace_cap)
        logger.info("iteration %d: criterion %.6g, Tr(S) = %.4g", iteration + 1, trace.objectives[-1], np.trace(S))
        trace.duals = duals

    trace.S = S
    return trace
