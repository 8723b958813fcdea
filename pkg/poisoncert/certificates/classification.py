"""
poisoncert/certificates/classification.py
Certificate for the regularized hinge-loss learner on label-multiplied points.

The adversarial indicator 𝕀[θᵀz_adv ≤ 1] splits the bound into two programs:
OPT₁ (indicator off, the poisoned step only shrinks θ) and OPT₂ (indicator on).
Benign indicators are relaxed with binary variables, big-M constraints and
McCormick envelopes; the multipliers of those relaxations are the ν blocks below.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from poisoncert.certcore.types import (
    Ball,
    ContaminatedStream,
    EmpiricalSource,
    HingeOnTarget,
    HingeRule,
    QuadraticMultiplier,
)
from poisoncert.certcore.verify import verify_certificate
from poisoncert.certificates.result import CertificateResult
from poisoncert.config.settings import SearchSettings, SolverSettings
from poisoncert.sdp import ConeProgram, ProgramBuilder, Solution, bmat, concatenate, solve
from poisoncert.sdp.epigraph import matrix_fractional_epigraph
from poisoncert.sdp.solver import MAX_ITER, OPTIMAL
from poisoncert.utils.exceptions import ContractViolation, InfeasibleProgram
from poisoncert.utils.validation import as_symmetric, as_vector, require_range

logger = logging.getLogger(__name__)

SENSES = ("le", "eq")
_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ClassInstance:
    """Training points z = y·x (‖z‖ ≤ 1), hinge step size η, regularization σ, poison rate ε."""
    points: np.ndarray
    eta: float
    sigma: float
    epsilon: float
    targets: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ContractViolation("classification instance needs at least one point")
        if np.max(np.linalg.norm(pts, axis=1)) > 1.0 + _NORM_TOL:
            raise ContractViolation("classification points must satisfy ||z|| <= 1")
        targets = pts if self.targets is None else np.asarray(self.targets, dtype=float).reshape(-1, pts.shape[1])
        if np.max(np.linalg.norm(targets, axis=1)) > 1.0 + _NORM_TOL:
            raise ContractViolation("classification targets must satisfy ||z|| <= 1")
        eta = require_range(self.eta, "eta", 0.0, low_open=True)
        sigma = require_range(self.sigma, "sigma", 0.0, low_open=True)
        if not 0.0 < eta * sigma < 1.0:
            raise ContractViolation(f"need 0 < sigma * eta < 1, got {sigma * eta:g}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "epsilon", require_range(self.epsilon, "epsilon", 0.0, 1.0))

    @classmethod
    def from_dataset(cls, points, eta: float, sigma: float, epsilon: float, cap: int = 200,
                     seed: int = 0, targets=None) -> "ClassInstance":
        """Build an instance from a processed dataset, subsampling to `cap` points with a fixed seed."""
        pts = np.asarray(points, dtype=float)
        if cap < 1:
            raise ContractViolation("point cap must be at least 1")
        if pts.shape[0] > cap:
            keep = np.sort(np.random.default_rng(seed).choice(pts.shape[0], size=cap, replace=False))
            logger.info("subsampled %d of %d training points (seed %d)", cap, pts.shape[0], seed)
            pts = pts[keep]
        return cls(pts, eta, sigma, epsilon, targets)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def targets_are_points(self) -> bool:
        return self.targets.shape == self.points.shape and np.array_equal(self.targets, self.points)

    def with_epsilon(self, epsilon: float) -> "ClassInstance":
        return ClassInstance(self.points, self.eta, self.sigma, epsilon, self.targets)

    def rule(self) -> HingeRule:
        return HingeRule(self.eta, self.sigma)

    def stream(self) -> ContaminatedStream:
        return ContaminatedStream(self.epsilon, EmpiricalSource(self.points))

    def objective(self) -> HingeOnTarget:
        return HingeOnTarget(self.targets)

    def adversarial_set(self) -> Ball:
        return Ball(np.zeros(self.dim), 1.0)

    def domain(self) -> Ball:
        return Ball(np.zeros(self.dim), 1.0 / self.sigma)


@dataclass(frozen=True, eq=False)
class ClassDualVars:
    A: np.ndarray
    b: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    nu3: np.ndarray
    nu4: np.ndarray
    nu5: np.ndarray
    nu6: np.ndarray
    nu7: np.ndarray
    nu8: float = 0.0
    nu9: float = 0.0
    nu10: float = 0.0
    targets: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        A = as_symmetric(self.A, "A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", as_vector(self.b, "b", A.shape[0]))
        for name in ("nu1", "nu2", "nu3", "nu4", "nu5", "nu6", "nu7"):
            value = np.asarray(getattr(self, name), dtype=float)
            if np.any(value < 0):
                raise ContractViolation(f"{name} must be nonnegative")
            object.__setattr__(self, name, value)
        for name in ("nu8", "nu9", "nu10"):
            value = float(getattr(self, name))
            if value < 0:
                raise ContractViolation(f"{name} must be nonnegative")
            object.__setattr__(self, name, value)
        targets = {name: np.asarray(value, dtype=float) for name, value in self.targets.items()}
        for name, value in targets.items():
            if np.any(value < 0):
                raise ContractViolation(f"{name} must be nonnegative")
        object.__setattr__(self, "targets", targets)

    def multiplier(self) -> QuadraticMultiplier:
        return QuadraticMultiplier(self.A, self.b)

    def as_dict(self) -> Dict[str, object]:
        out = {name: getattr(self, name) for name in
               ("nu1", "nu2", "nu3", "nu4", "nu5", "nu6", "nu7", "nu8", "nu9", "nu10")}
        out.update(self.targets)
        return out


@dataclass
class BranchSolve:
    """One branch of the indicator case split, solved."""
    branch: int
    solution: Optional[Solution]
    duals: Optional[ClassDualVars] = None
    error: Optional[str] = None

    @property
    def usable(self) -> bool:
        return self.solution is not None and self.solution.status in (OPTIMAL, MAX_ITER)

    @property
    def value(self) -> float:
        return self.solution.objective_value if self.usable else -np.inf


@dataclass
class _Group:
    """Margin indicators qᵢ = 𝕀[θᵀzᵢ ≤ 1] of one point set and the multipliers of their relaxation.

    `dynamics` groups carry the benign update terms, `loss` groups the hinge
    objective; training points double as targets when both are set.
    """
    points: np.ndarray
    dynamics: bool
    loss: bool
    nu: Dict[str, object] = field(default_factory=dict)


@dataclass
class _Layout:
    A: object
    b: object
    nu: Dict[str, object] = field(default_factory=dict)
    groups: List[_Group] = field(default_factory=list)


def _declare(builder: ProgramBuilder, inst: ClassInstance, branch: int) -> _Layout:
    d = inst.dim
    layout = _Layout(builder.variable("A", (d, d), symmetric=True), builder.variable("b", d))
    if inst.targets_are_points:
        groups = [("nu", _Group(inst.points, dynamics=True, loss=True))]
    else:
        groups = [("nu", _Group(inst.points, dynamics=True, loss=False)),
                  ("mu", _Group(inst.targets, dynamics=False, loss=True))]
    for prefix, group in groups:
        n = group.points.shape[0]
        for k in (1, 2, 7):
            group.nu[f"nu{k}"] = builder.variable(f"{prefix}{k}", n, nonneg=True)
        for k in (3, 4, 5, 6):
            group.nu[f"nu{k}"] = builder.variable(f"{prefix}{k}", (n, d), nonneg=True)
        layout.groups.append(group)
    scalars = ("nu8", "nu9", "nu10") if branch == 2 else ("nu8",)
    for name in scalars:
        layout.nu[name] = builder.variable(name, nonneg=True)
    return layout


def _component_constraints(builder: ProgramBuilder, inst: ClassInstance, v: _Layout, group: _Group,
                           sense: str) -> None:
    """Stationarity in the free qᵢ and wᵢ = qᵢθ of one indicator group.

    The qᵢ row may be an inequality since qᵢ ≥ 0 stays a primal constraint;
    wᵢ is sign-free, so its rows are always equalities.
    """
    Z, n = group.points, group.points.shape[0]
    eta, sigma, eps = inst.eta, inst.sigma, inst.epsilon
    nu = group.nu

    top = ((1.0 + 1.0 / sigma) * (nu["nu1"] - nu["nu2"])
           + (nu["nu3"] - nu["nu4"] + nu["nu5"] - nu["nu6"]).sum(axis=1) / sigma - nu["nu7"])
    bottom = nu["nu3"] + nu["nu4"] - nu["nu5"] - nu["nu6"]
    if group.dynamics:
        AZ = Z @ v.A
        top = top + ((1.0 - eps) * eta ** 2 * (AZ * Z).sum(axis=1) + (1.0 - eps) * eta * (Z @ v.b)) / n
        bottom = bottom + 2.0 * (1.0 - eps) * eta * (1.0 - sigma * eta) * AZ / n
    if group.loss:
        top = top + 1.0 / n
        bottom = bottom - Z / n

    if sense == "le":
        builder.add_nonneg(-top)
    else:
        builder.add_zero(top)
    builder.add_zero(bottom)


def _group_terms(group: _Group, sigma: float, nu2_weight: float):
    """Linear coefficient on θ and constant contributed by one group's multipliers."""
    nu = group.nu
    linear = group.points.T @ (nu["nu1"] - nu["nu2"]) + (nu["nu6"] - nu["nu4"]).sum(axis=0)
    constant = (-nu["nu1"].sum() + nu2_weight * nu["nu2"].sum() + (nu["nu4"] + nu["nu6"]).sum() / sigma
                + nu["nu7"].sum())
    return linear, constant


def _build(inst: ClassInstance, branch: int, sense: str, nu2_weight: Optional[float]) -> ProgramBuilder:
    if sense not in SENSES:
        raise ContractViolation(f"constraint sense must be one of {SENSES}, got '{sense}'")
    weight = 2.0 + 1.0 / inst.sigma if nu2_weight is None else float(nu2_weight)
    logger.debug("OPT%d: sense %s, nu2 weight %.6g", branch, sense, weight)

    builder = ProgramBuilder(f"class-certificate-opt{branch}(N={inst.size}, d={inst.dim})")
    v = _declare(builder, inst, branch)
    nu = v.nu
    eta, sigma, eps = inst.eta, inst.sigma, inst.epsilon
    contraction = 1.0 - sigma * eta
    I = np.eye(inst.dim)

    linear = -sigma * eta * v.b
    q = nu["nu8"] / sigma ** 2
    for group in v.groups:
        _component_constraints(builder, inst, v, group, sense)
        group_linear, group_constant = _group_terms(group, sigma, weight)
        linear = linear + group_linear
        q = q + group_constant

    p_top = 0.5 * linear
    D_top = (1.0 - contraction ** 2) * v.A + nu["nu8"] * I

    if branch == 1:
        p, D = p_top, D_top
    else:
        cross = -eps * contraction * eta * v.A + nu["nu9"] * I
        D = bmat([[D_top, cross], [cross, -eps * eta ** 2 * v.A + nu["nu10"] * I]])
        p = concatenate([p_top, 0.5 * eps * eta * v.b])
        q = q + 2.0 * nu["nu9"] + nu["nu10"]

    t = matrix_fractional_epigraph(builder, p, D, q)
    builder.minimize(t)
    return builder


def build_opt1(inst: ClassInstance, sense: str = "le", nu2_weight: Optional[float] = None) -> ConeProgram:
    """Program for the branch where the poisoned point leaves the margin (θᵀz_adv > 1)."""
    return _build(inst, 1, sense, nu2_weight).build()


def build_opt2(inst: ClassInstance, sense: str = "le", nu2_weight: Optional[float] = None) -> ConeProgram:
    """Program for the branch where the poisoned point is inside the margin (θᵀz_adv ≤ 1)."""
    return _build(inst, 2, sense, nu2_weight).build()


def dual_vars_from_solution(solution: Solution, inst: ClassInstance) -> ClassDualVars:
    """Recover the shared variable layout; multipliers absent from a branch read as zero."""
    N, d = inst.size, inst.dim

    def get(name, shape):
        if name not in solution.values:
            return np.zeros(shape)
        return np.maximum(np.asarray(solution.value(name), dtype=float), 0.0)

    targets = {}
    if not inst.targets_are_points:
        M = inst.targets.shape[0]
        targets = {f"mu{k}": get(f"mu{k}", M) for k in (1, 2, 7)}
        targets.update({f"mu{k}": get(f"mu{k}", (M, d)) for k in (3, 4, 5, 6)})

    A = solution.value("A")
    return ClassDualVars(
        A=0.5 * (A + A.T),
        b=solution.value("b"),
        nu1=get("nu1", N), nu2=get("nu2", N), nu7=get("nu7", N),
        nu3=get("nu3", (N, d)), nu4=get("nu4", (N, d)), nu5=get("nu5", (N, d)), nu6=get("nu6", (N, d)),
        nu8=float(get("nu8", ())), nu9=float(get("nu9", ())), nu10=float(get("nu10", ())),
        targets=targets,
    )


def _solve_branch(inst: ClassInstance, branch: int, sense: str, nu2_weight: Optional[float],
                  settings: Optional[SolverSettings], tol: Optional[float]) -> BranchSolve:
    program = _build(inst, branch, sense, nu2_weight).build()
    try:
        solution = solve(program, settings, tol=tol)
    except InfeasibleProgram as exc:
        return BranchSolve(branch, None, error=str(exc))
    result = BranchSolve(branch, solution)
    if result.usable:
        result.duals = dual_vars_from_solution(solution, inst)
    else:
        result.error = f"status {solution.status}"
    return result


def solve_branches(inst: ClassInstance, sense: str = "le", nu2_weight: Optional[float] = None,
                   settings: Optional[SolverSettings] = None,
                   tol: Optional[float] = None) -> Tuple[BranchSolve, BranchSolve]:
    """Solve OPT₁ and OPT₂ concurrently."""
    with ThreadPoolExecutor(max_workers=2) as pool:
        futures = [pool.submit(_solve_branch, inst, branch, sense, nu2_weight, settings, tol) for branch in (1, 2)]
        first, second = (f.result() for f in futures)
    for branch in (first, second):
        if not branch.usable:
            logger.warning("OPT%d unusable: %s", branch.branch, branch.error)
    return first, second


def certify_class(inst: ClassInstance, tol: Optional[float] = None, solver: Optional[SolverSettings] = None,
                  search: Optional[SearchSettings] = None, sense: str = "le",
                  nu2_weight: Optional[float] = None) -> CertificateResult:
    """max(OPT₁, OPT₂), then verify the winning multiplier against the exact Lagrangian."""
    started = time.perf_counter()
    branches = solve_branches(inst, sense, nu2_weight, solver, tol)
    usable = [br for br in branches if br.usable]
    if not usable:
        raise InfeasibleProgram(
            "both classification branches failed: " + "; ".join(f"OPT{br.branch}: {br.error}" for br in branches),
            status="; ".join(str(br.error) for br in branches),
        )
    winner = max(usable, key=lambda br: br.value)
    lam = winner.duals.multiplier()
    verification = verify_certificate(lam, inst.rule(), inst.stream(), inst.objective(),
                                      inst.domain(), inst.adversarial_set(), search)
    logger.info("class certificate: OPT1 %.6g, OPT2 %.6g, verified %.6g",
                branches[0].value, branches[1].value, verification.bound)
    return CertificateResult(
        kind="class",
        solver_value=winner.value,
        verified=verification.bound,
        multiplier=lam,
        solver_status=winner.solution.status,
        gap=winner.solution.gap,
        verification_converged=verification.converged,
        duals=winner.duals.as_dict(),
        metadata={
            "N": inst.size,
            "d": inst.dim,
            "eta": inst.eta,
            "sigma": inst.sigma,
            "epsilon": inst.epsilon,
            "sense": sense,
            "opt1": branches[0].value,
            "opt2": branches[1].value,
            "winner": winner.branch,
            "evaluations": verification.evaluations,
            "wall_time": time.perf_counter() - started,
        },
    )


def effective_benign_rule(inst: ClassInstance) -> HingeRule:
    """Expected update when the poisoned step only shrinks θ: rate (1−ε)η, regularization σ/(1−ε)."""
    if inst.epsilon >= 1.0:
        raise ContractViolation("effective benign rule needs epsilon < 1")
    keep = 1.0 - inst.epsilon
    return HingeRule(keep * inst.eta, inst.sigma / keep)
