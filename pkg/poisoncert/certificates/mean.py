"""
poisoncert/certificates/mean.py
Certificate for online mean estimation with a Gaussian noise defense.

For λ(θ) = θᵀAθ + θᵀb and multiplier ν on the budget ‖z − μ‖² ≤ r, the
Lagrangian bound is a concave quadratic in (θ, z_adv) whose supremum is

    g(A, b, ν) = ¼ pᵀD⁻¹p + c

with D, p, c affine in (A, b, ν). Minimizing g is a semidefinite program.
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from poisoncert.certcore.types import (
    Ball,
    ContaminatedStream,
    GaussianSource,
    MeanRule,
    QuadraticMultiplier,
    SquaredDistance,
)
from poisoncert.certcore.verify import default_mean_domain, verify_certificate
from poisoncert.certificates.result import CertificateResult
from poisoncert.config.settings import SearchSettings, SolverSettings
from poisoncert.sdp import ProgramBuilder, bmat, concatenate, matrix_fractional_epigraph, solve
from poisoncert.sdp.epigraph import matrix_fractional_value
from poisoncert.sdp.solver import INFEASIBLE, UNBOUNDED, Solution
from poisoncert.utils.exceptions import ContractViolation, InfeasibleProgram
from poisoncert.utils.validation import as_psd, as_symmetric, as_vector, require_range

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeanInstance:
    mu: np.ndarray
    Sigma: np.ndarray
    eta: float
    S: np.ndarray
    epsilon: float
    r: float = 1.0

    def __post_init__(self):
        mu = as_vector(self.mu, "mu")
        d = mu.shape[0]
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", as_psd(self.Sigma, "Sigma", d))
        object.__setattr__(self, "S", as_psd(self.S, "S", d))
        object.__setattr__(self, "eta", require_range(self.eta, "eta", 0.0, 1.0, low_open=True, high_open=True))
        object.__setattr__(self, "epsilon", require_range(self.epsilon, "epsilon", 0.0, 1.0))
        object.__setattr__(self, "r", require_range(self.r, "r", 0.0, low_open=True))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def with_updates(self, **changes) -> "MeanInstance":
        fields = dict(mu=self.mu, Sigma=self.Sigma, eta=self.eta, S=self.S, epsilon=self.epsilon, r=self.r)
        fields.update(changes)
        return MeanInstance(**fields)

    def rule(self) -> MeanRule:
        return MeanRule(self.eta, self.S)

    def stream(self) -> ContaminatedStream:
        return ContaminatedStream(self.epsilon, GaussianSource(self.mu, self.Sigma))

    def objective(self) -> SquaredDistance:
        return SquaredDistance(self.mu)

    def adversarial_set(self) -> Ball:
        return Ball(self.mu, np.sqrt(self.r))

    def domain(self) -> Ball:
        return default_mean_domain(self.mu, self.r)


@dataclass(frozen=True, eq=False)
class MeanDualPoint:
    A: np.ndarray
    b: np.ndarray
    nu: float

    def __post_init__(self):
        A = as_symmetric(self.A, "A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", as_vector(self.b, "b", A.shape[0]))
        object.__setattr__(self, "nu", float(self.nu))

    def multiplier(self) -> QuadraticMultiplier:
        return QuadraticMultiplier(self.A, self.b)

    def combine(self, other: "MeanDualPoint", t: float) -> "MeanDualPoint":
        """t·self + (1 − t)·other."""
        return MeanDualPoint(t * self.A + (1 - t) * other.A, t * self.b + (1 - t) * other.b,
                             t * self.nu + (1 - t) * other.nu)


def dual_terms(A, b, nu, inst: MeanInstance):
    """(D, p, c) of g = ¼ pᵀD⁻¹p + c; works for arrays and for AffineExpr operands."""
    mu, eta, eps = inst.mu, inst.eta, inst.epsilon
    d = inst.dim
    I = np.eye(d)
    cross = -eps * eta * (1.0 - eta) * A
    D = bmat([[(1.0 - (1.0 - eta) ** 2) * A - I, cross],
              [cross, -eps * eta ** 2 * A + nu * I]])
    p = concatenate([2.0 * (1.0 - eps) * eta * (1.0 - eta) * (A @ mu) - 2.0 * mu - eta * b,
                     eps * eta * b + 2.0 * nu * mu])
    quad = (A * np.outer(mu, mu)).sum()
    trace_sigma = (A * inst.Sigma).sum()
    trace_s = (A * inst.S).sum()
    bmu = b @ mu
    c = ((1.0 - eps) * (eta ** 2 * trace_sigma + eta ** 2 * quad + eta * bmu)
         + float(mu @ mu) + eta ** 2 * trace_s + nu * (inst.r - float(mu @ mu)))
    return D, p, c


def _numeric_terms(dual: MeanDualPoint, inst: MeanInstance) -> Tuple[np.ndarray, np.ndarray, float]:
    if dual.A.shape[0] != inst.dim:
        raise ContractViolation("dual point and instance dimensions differ")
    D, p, c = dual_terms(dual.A, dual.b, dual.nu, inst)
    return D.value(np.zeros(0)), p.value(np.zeros(0)), float(c)


def eval_g(dual: MeanDualPoint, inst: MeanInstance) -> float:
    """Value of the mean-certificate dual function; +inf at infeasible multipliers."""
    if dual.nu < 0:
        return np.inf
    D, p, c = _numeric_terms(dual, inst)
    return matrix_fractional_value(0.5 * p, D, c)


def g_affine_in_S(dual: MeanDualPoint, inst: MeanInstance) -> Tuple[float, np.ndarray]:
    """(g₀, C) with g(S) = g₀ + ⟨C, S⟩ for the fixed multipliers."""
    d = inst.dim
    g0 = eval_g(dual, inst.with_updates(S=np.zeros((d, d))))
    return g0, inst.eta ** 2 * dual.A


def build_mean_program(inst: MeanInstance) -> ProgramBuilder:
    """Epigraph program in (A, b, ν, t)."""
    builder = ProgramBuilder(f"mean-certificate(d={inst.dim}, eps={inst.epsilon:g})")
    A = builder.variable("A", (inst.dim, inst.dim), symmetric=True)
    b = builder.variable("b", inst.dim)
    nu = builder.variable("nu", nonneg=True)
    D, p, c = dual_terms(A, b, nu, inst)
    t = matrix_fractional_epigraph(builder, 0.5 * p, D, c)
    builder.minimize(t)
    return builder


def solve_mean_dual(inst: MeanInstance, settings: Optional[SolverSettings] = None,
                    tol: Optional[float] = None) -> Tuple[MeanDualPoint, Solution]:
    """Minimize g over (A, b, ν ≥ 0)."""
    solution = solve(build_mean_program(inst).build(), settings, tol=tol)
    if solution.status in (INFEASIBLE, UNBOUNDED):
        raise InfeasibleProgram(f"mean certificate program reported {solution.status}", solution.status)
    A = solution.value("A")
    dual = MeanDualPoint(0.5 * (A + A.T), solution.value("b"), max(float(solution.value("nu")), 0.0))
    return dual, solution


def certify_mean(inst: MeanInstance, tol: Optional[float] = None, solver: Optional[SolverSettings] = None,
                 search: Optional[SearchSettings] = None, domain: Optional[Ball] = None) -> CertificateResult:
    """Solve the certificate program and verify the returned multiplier."""
    started = time.perf_counter()
    dual, solution = solve_mean_dual(inst, solver, tol=tol)
    lam = dual.multiplier()
    verification = verify_certificate(lam, inst.rule(), inst.stream(), inst.objective(),
                                      domain or inst.domain(), inst.adversarial_set(), search)
    logger.info("mean certificate: solver %.6g, verified %.6g", solution.objective_value, verification.bound)
    return CertificateResult(
        kind="mean",
        solver_value=solution.objective_value,
        verified=verification.bound,
        multiplier=lam,
        solver_status=solution.status,
        gap=solution.gap,
        verification_converged=verification.converged,
        duals={"A": dual.A, "b": dual.b, "nu": dual.nu},
        metadata={
            "d": inst.dim,
            "eta": inst.eta,
            "epsilon": inst.epsilon,
            "r": inst.r,
            "trace_S": float(np.trace(inst.S)),
            "iterations": solution.iterations,
            "evaluations": verification.evaluations,
            "wall_time": time.perf_counter() - started,
        },
    )


def benign_loss(eta: float, S) -> float:
    """Stationary benign loss η²·Tr(S) of the defended mean rule."""
    S = as_psd(S, "S")
    return float(eta ** 2 * np.trace(S))


def stationary_covariance_candidates(eta: float, Sigma, S) -> Dict[str, np.ndarray]:
    """Two closed forms for the benign stationary covariance, for comparison with Monte Carlo.

    `quoted` is η²S; `fixed_point` solves V = (1 − η)²V + η²(Σ + S).
    """
    Sigma = np.asarray(Sigma, dtype=float)
    S = np.asarray(S, dtype=float)
    return {"quoted": eta ** 2 * S, "fixed_point": eta * (Sigma + S) / (2.0 - eta)}
