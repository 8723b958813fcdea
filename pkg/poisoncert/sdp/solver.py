"""
poisoncert/sdp/solver.py
Primal-dual interior-point method for small dense cone programs.

Standard form:  minimize cᵀx  s.t.  Gx + s = h,  Ex = e,  s ∈ K
with K a product of the nonnegative orthant and PSD cones. Directions use
Nesterov-Todd scaling and a Mehrotra predictor-corrector; iterates may start
infeasible.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg, sparse

from poisoncert.config.settings import SolverSettings
from poisoncert.sdp.program import ConeProgram
from poisoncert.utils.exceptions import ContractViolation, NumericalBreakdown

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"

BACKTRACK_FACTOR = 0.5
BACKTRACK_STEPS = 40
STALL_SLACK = 100.0


@dataclass
class Solution:
    """Solver output; `values` maps declared variable names to their values."""
    x: np.ndarray
    objective_value: float
    status: str
    gap: float
    iterations: int
    dual_objective: float = np.nan
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    values: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, name: str) -> np.ndarray:
        return self.values[name]


class _ConeVector:
    """Point of K: an orthant part and a list of symmetric matrices."""

    __slots__ = ("lin", "mats")

    def __init__(self, lin: np.ndarray, mats: List[np.ndarray]):
        self.lin = lin
        self.mats = mats

    def __add__(self, other: "_ConeVector") -> "_ConeVector":
        return _ConeVector(self.lin + other.lin, [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other: "_ConeVector") -> "_ConeVector":
        return _ConeVector(self.lin - other.lin, [a - b for a, b in zip(self.mats, other.mats)])

    def scaled(self, alpha: float) -> "_ConeVector":
        return _ConeVector(alpha * self.lin, [alpha * m for m in self.mats])

    def dot(self, other: "_ConeVector") -> float:
        return float(self.lin @ other.lin + sum(np.sum(a * b) for a, b in zip(self.mats, other.mats)))

    def norm(self) -> float:
        return np.sqrt(max(self.dot(self), 0.0))

    def min_eig(self) -> float:
        values = [np.min(self.lin, initial=np.inf)]
        values += [np.linalg.eigvalsh(m)[0] for m in self.mats]
        return float(min(values))

    def symmetrized(self) -> "_ConeVector":
        return _ConeVector(self.lin, [_sym(m) for m in self.mats])

    def is_interior(self) -> bool:
        """Strictly inside K, judged by a Cholesky factorization of each block."""
        if np.any(self.lin <= 0):
            return False
        try:
            for m in self.mats:
                linalg.cholesky(m, lower=True)
        except linalg.LinAlgError:
            return False
        return True


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _jordan(a: _ConeVector, b: _ConeVector) -> _ConeVector:
    """a ∘ b: elementwise on the orthant, (AB + BA)/2 on matrices."""
    return _ConeVector(a.lin * b.lin, [_sym(A @ B) for A, B in zip(a.mats, b.mats)])


class _Scaling:
    """Nesterov-Todd scaling W with W⁻ᵀs = Wz = λ."""

    def __init__(self, s: _ConeVector, z: _ConeVector):
        self.w = np.sqrt(s.lin / z.lin)
        self.lam = _ConeVector(np.sqrt(s.lin * z.lin), [])
        self.R, self.Rinv = [], []
        for S, Z in zip(s.mats, z.mats):
            Ls = linalg.cholesky(S, lower=True)
            Lz = linalg.cholesky(Z, lower=True)
            U, lam, Vt = linalg.svd(Lz.T @ Ls)
            self.R.append(Ls @ Vt.T / np.sqrt(lam))
            self.Rinv.append((U.T @ Lz.T) / np.sqrt(lam)[:, None])
            self.lam.mats.append(np.diag(lam))

    def apply(self, z: _ConeVector) -> _ConeVector:
        """W z."""
        return _ConeVector(self.w * z.lin, [R.T @ Z @ R for R, Z in zip(self.R, z.mats)])

    def apply_transpose(self, u: _ConeVector) -> _ConeVector:
        """Wᵀ u."""
        return _ConeVector(self.w * u.lin, [R @ U @ R.T for R, U in zip(self.R, u.mats)])

    def apply_inverse_transpose(self, s: _ConeVector) -> _ConeVector:
        """W⁻ᵀ s."""
        return _ConeVector(s.lin / self.w, [Ri @ S @ Ri.T for Ri, S in zip(self.Rinv, s.mats)])

    def apply_phi(self, v: _ConeVector) -> _ConeVector:
        """(WᵀW)⁻¹ v."""
        out = []
        for Ri, V in zip(self.Rinv, v.mats):
            P = Ri.T @ Ri
            out.append(_sym(P @ V @ P))
        return _ConeVector(v.lin / self.w ** 2, out)

    def lambda_solve(self, d: _ConeVector) -> _ConeVector:
        """u with λ ∘ u = d."""
        mats = []
        for L, D in zip(self.lam.mats, d.mats):
            diag = np.diag(L)
            mats.append(2.0 * D / (diag[:, None] + diag[None, :]))
        return _ConeVector(d.lin / self.lam.lin, mats)


class _Operators:
    """G, Gᵀ and h for the standard form of a ConeProgram."""

    def __init__(self, program: ConeProgram):
        self.A = program.ineq_matrix
        self.At = program.ineq_matrix.T.tocsr()
        self.blocks = program.psd_blocks
        self.flat = [b.coefficients.reshape(b.coefficients.shape[0], -1) for b in self.blocks]
        self.h = _ConeVector(program.ineq_offset.copy(), [b.constant.copy() for b in self.blocks])
        self.E = program.eq_matrix
        self.e = -program.eq_offset

    def G(self, x: np.ndarray) -> _ConeVector:
        mats = [-np.tensordot(x, b.coefficients, axes=1) for b in self.blocks]
        return _ConeVector(-(self.A @ x), mats)

    def Gt(self, z: _ConeVector) -> np.ndarray:
        out = -(self.At @ z.lin)
        for F, Z in zip(self.flat, z.mats):
            out = out - F @ Z.ravel()
        return out

    def identity(self) -> _ConeVector:
        return _ConeVector(np.ones(self.A.shape[0]), [np.eye(b.size) for b in self.blocks])

    def zeros(self) -> _ConeVector:
        return _ConeVector(np.zeros(self.A.shape[0]), [np.zeros((b.size, b.size)) for b in self.blocks])

    def normal_matrix(self, scaling: Optional[_Scaling]) -> np.ndarray:
        """GᵀΦG with Φ = (WᵀW)⁻¹ (identity when scaling is None)."""
        if scaling is None:
            H = (self.At @ self.A).toarray()
            for F in self.flat:
                H += F @ F.T
            return H
        H = (self.At @ sparse.diags(1.0 / scaling.w ** 2) @ self.A).toarray()
        for b, Ri in zip(self.blocks, scaling.Rinv):
            scaled = np.einsum("ab,nbc,dc->nad", Ri, b.coefficients, Ri)
            flat = scaled.reshape(scaled.shape[0], -1)
            H += flat @ flat.T
        return H


def _max_step(u: _ConeVector, du: _ConeVector) -> float:
    """Largest α with u + α du in K (u strictly inside)."""
    alpha = np.inf
    neg = du.lin < 0
    if np.any(neg):
        alpha = min(alpha, float(np.min(-u.lin[neg] / du.lin[neg])))
    for U, dU in zip(u.mats, du.mats):
        L = linalg.cholesky(U, lower=True)
        M = linalg.solve_triangular(L, linalg.solve_triangular(L, _sym(dU), lower=True).T, lower=True)
        smallest = np.linalg.eigvalsh(_sym(M))[0]
        if smallest < 0:
            alpha = min(alpha, -1.0 / smallest)
    return alpha


class _KKTSystem:
    """Factored [[H + δI, Eᵀ], [E, −δI]]."""

    def __init__(self, H: np.ndarray, E: sparse.csr_matrix, regularization: float, iteration: int):
        n, p = H.shape[0], E.shape[0]
        delta = regularization * (1.0 + float(np.max(np.abs(np.diag(H)), initial=0.0)))
        K = np.zeros((n + p, n + p))
        K[:n, :n] = H + delta * np.eye(n)
        if p:
            Ed = E.toarray()
            K[:n, n:] = Ed.T
            K[n:, :n] = Ed
            K[n:, n:] = -delta * np.eye(p)
        self.n = n
        self.K = K
        self.iteration = iteration
        try:
            self.factor = linalg.lu_factor(K, check_finite=True)
        except (ValueError, linalg.LinAlgError) as e:
            raise self._breakdown(f"KKT factorization failed: {e}") from e

    def _breakdown(self, message: str) -> NumericalBreakdown:
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(self.K)) if np.all(np.isfinite(self.K)) else np.inf
        return NumericalBreakdown(message, condition=cond, iteration=self.iteration)

    def solve(self, rx: np.ndarray, ry: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        with np.errstate(all="ignore"):
            sol = linalg.lu_solve(self.factor, np.concatenate([rx, ry]))
        if not np.all(np.isfinite(sol)):
            raise self._breakdown("KKT system is singular")
        return sol[: self.n], sol[self.n:]


def _newton(ops: _Operators, kkt: _KKTSystem, scaling: _Scaling, u: _ConeVector,
            r_d: np.ndarray, r_p: _ConeVector, r_e: np.ndarray):
    """Solve the linearized system for (Δx, Δy, Δs, Δz) given λ⁻¹ ⋄ d_c = u."""
    Wt_u = scaling.apply_transpose(u)
    shift = r_p + Wt_u
    rhs_x = -r_d - ops.Gt(scaling.apply_phi(shift))
    dx, dy = kkt.solve(rhs_x, -r_e)
    dz = scaling.apply_phi(ops.G(dx) + shift)
    ds = Wt_u - scaling.apply_transpose(scaling.apply(dz))
    return dx, dy, ds, dz


def _initial_point(ops: _Operators, c: np.ndarray, settings: SolverSettings):
    kkt = _KKTSystem(ops.normal_matrix(None), ops.E, max(settings.regularization, 1e-10), 0)

    x, _ = kkt.solve(ops.Gt(ops.h), ops.e)
    s = ops.h - ops.G(x)
    u, y = kkt.solve(-c, np.zeros(ops.E.shape[0]))
    z = ops.G(u)

    identity = ops.identity()
    s = s + identity.scaled(max(0.0, 1.0 - s.min_eig()))
    z = z + identity.scaled(max(0.0, 1.0 - z.min_eig()))
    return x, y, s, z


def _stalled_status(pres: float, dres: float, gap: float, relgap: float, feas_tol: float, gap_tol: float) -> str:
    """Status of the last iterate once no further interior step can be taken."""
    loose_feas, loose_gap = STALL_SLACK * feas_tol, STALL_SLACK * gap_tol
    if pres <= loose_feas and dres <= loose_feas and (gap <= loose_gap or relgap <= loose_gap):
        return OPTIMAL
    return MAX_ITER


def solve(program: ConeProgram, settings: Optional[SolverSettings] = None,
          tol: Optional[float] = None) -> Solution:
    """Solve a ConeProgram.

    Args:
        program: Program to solve
        settings: Tolerances and iteration cap, defaults to SolverSettings()
        tol: Overrides the duality-gap tolerance when given

    Returns:
        Solution with status optimal, infeasible, unbounded or max_iter

    Raises:
        NumericalBreakdown: the Newton system could not be factored

    An iterate that can no longer move inside the cone ends the run; it is
    reported optimal only if it meets the tolerances loosened by STALL_SLACK.
    """
    settings = settings or SolverSettings()
    gap_tol = settings.gap_tol if tol is None else tol
    feas_tol = settings.feasibility_tol
    if program.cone_degree == 0:
        raise ContractViolation("program has no cone constraints")

    ops = _Operators(program)
    c = program.c
    degree = program.cone_degree
    identity = ops.identity()
    res_x0 = max(1.0, float(np.linalg.norm(c)))
    res_y0 = max(1.0, ops.h.norm() + float(np.linalg.norm(ops.e)))

    x, y, s, z = _initial_point(ops, c, settings)
    status = MAX_ITER
    iteration = 0
    pcost = dcost = gap = pres = dres = np.nan

    for iteration in range(settings.max_iterations + 1):
        r_d = ops.Gt(z) + (ops.E.T @ y) + c
        r_p = ops.G(x) + s - ops.h
        r_e = ops.E @ x - ops.e

        gap = s.dot(z)
        pcost = float(c @ x)
        dcost = -ops.h.dot(z) - float(ops.e @ y)
        pres = max(r_p.norm(), float(np.linalg.norm(r_e))) / res_y0
        dres = float(np.linalg.norm(r_d)) / res_x0
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost
        else:
            relgap = np.inf
        logger.debug("iter %3d  pcost %+.8e  dcost %+.8e  gap %.2e  pres %.2e  dres %.2e",
                     iteration, pcost, dcost, gap, pres, dres)

        if pres <= feas_tol and dres <= feas_tol and (gap <= gap_tol or relgap <= gap_tol):
            status = OPTIMAL
            break

        hz_ey = ops.h.dot(z) + float(ops.e @ y)
        if hz_ey < 0:
            pinfres = float(np.linalg.norm(ops.Gt(z) + ops.E.T @ y)) / res_x0 / -hz_ey
            if pinfres <= feas_tol:
                status = INFEASIBLE
                break
        if pcost < 0:
            dinfres = max((ops.G(x) + s).norm(), float(np.linalg.norm(ops.E @ x))) / res_y0 / -pcost
            if dinfres <= feas_tol:
                status = UNBOUNDED
                break
        if iteration == settings.max_iterations:
            break

        try:
            scaling = _Scaling(s, z)
        except linalg.LinAlgError as e:
            logger.warning("%s: scaling failed at iteration %d (%s)", program.name or "program", iteration, e)
            status = _stalled_status(pres, dres, gap, relgap, feas_tol, gap_tol)
            break
        kkt = _KKTSystem(ops.normal_matrix(scaling), ops.E, settings.regularization, iteration)
        lam = scaling.lam
        mu = gap / degree

        # predictor
        u_aff = lam.scaled(-1.0)
        dx, dy, ds, dz = _newton(ops, kkt, scaling, u_aff, r_d, r_p, r_e)
        alpha = min(1.0, _max_step(s, ds), _max_step(z, dz))
        sigma = min(1.0, max(0.0, 1.0 - alpha + alpha ** 2 * ds.dot(dz) / max(gap, 1e-300))) ** 3

        # combined centering-corrector step
        second_order = _jordan(scaling.apply_inverse_transpose(ds), scaling.apply(dz))
        d_c = identity.scaled(sigma * mu) - _jordan(lam, lam) - second_order
        u = scaling.lambda_solve(d_c)
        keep = 1.0 - sigma
        dx, dy, ds, dz = _newton(ops, kkt, scaling, u, keep * r_d, r_p.scaled(keep), keep * r_e)
        ds, dz = ds.symmetrized(), dz.symmetrized()
        alpha = min(1.0, settings.step_fraction * min(_max_step(s, ds), _max_step(z, dz)))

        # rounding can still push an ill-conditioned block out of the cone
        for _ in range(BACKTRACK_STEPS):
            s_next = (s + ds.scaled(alpha)).symmetrized()
            z_next = (z + dz.scaled(alpha)).symmetrized()
            if s_next.is_interior() and z_next.is_interior():
                break
            alpha *= BACKTRACK_FACTOR
        else:
            logger.warning("%s: no interior step at iteration %d", program.name or "program", iteration)
            status = _stalled_status(pres, dres, gap, relgap, feas_tol, gap_tol)
            break

        x = x + alpha * dx
        y = y + alpha * dy
        s, z = s_next, z_next

    if status == INFEASIBLE:
        logger.info("%s: primal infeasible after %d iterations", program.name or "program", iteration)
    elif status == UNBOUNDED:
        logger.info("%s: dual infeasible (unbounded) after %d iterations", program.name or "program", iteration)
    else:
        logger.info("%s: %s after %d iterations, objective %.8g, gap %.2e",
                    program.name or "program", status, iteration, pcost + program.objective_offset, gap)

    values = {name: expr.value(x) for name, expr in program.variables.items()}
    return Solution(
        x=x,
        objective_value=pcost + program.objective_offset,
        status=status,
        gap=float(gap),
        iterations=iteration,
        dual_objective=dcost + program.objective_offset,
        primal_residual=float(pres),
        dual_residual=float(dres),
        values=values,
    )
