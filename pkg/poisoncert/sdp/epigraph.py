"""
poisoncert/sdp/epigraph.py
Matrix-fractional objectives pᵀD⁻¹p + q as semidefinite epigraphs.
"""

import numpy as np

from poisoncert.sdp.expression import AffineExpr, bmat
from poisoncert.sdp.program import ConeProgram, ProgramBuilder
from poisoncert.utils.exceptions import ContractViolation

PSD_TOL = 1e-9
RANGE_TOL = 1e-7


def matrix_fractional_epigraph(builder: ProgramBuilder, p, D, q, name: str = "t") -> AffineExpr:
    """Introduce t with [[D, p], [pᵀ, t − q]] ⪰ 0 and return t.

    By the Schur complement the smallest feasible t is pᵀD⁺p + q whenever D ⪰ 0
    and p lies in the range of D; add the returned t to the objective.
    """
    p = AffineExpr.lift(p, builder.n_vars)
    D = AffineExpr.lift(D, builder.n_vars)
    q = AffineExpr.lift(q, builder.n_vars)
    if p.ndim != 1 or D.shape != (p.shape[0], p.shape[0]) or q.shape != ():
        raise ContractViolation(
            f"epigraph needs p of shape (k,), D of shape (k, k), scalar q; got {p.shape}, {D.shape}, {q.shape}"
        )
    t = builder.variable(name)
    builder.add_psd(bmat([[D, p.as_column()], [p.as_row(), t - q]]))
    return t


def matrix_fractional_program(p, D, q, name: str = "matrix-fractional") -> ConeProgram:
    """Stand-alone program: minimize t over the epigraph of fixed or affine data."""
    builder = ProgramBuilder(name)
    t = matrix_fractional_epigraph(builder, p, D, q)
    builder.minimize(t)
    return builder.build()


def matrix_fractional_value(p: np.ndarray, D: np.ndarray, q: float = 0.0) -> float:
    """pᵀD⁺p + q, or +inf when D is not PSD or p leaves the range of D."""
    p = np.asarray(p, dtype=float)
    D = np.asarray(D, dtype=float)
    w, V = np.linalg.eigh(0.5 * (D + D.T))
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if w.size and w[0] < -PSD_TOL * scale:
        return np.inf
    coords = V.T @ p
    positive = w > 1e-10 * scale
    if np.any(np.abs(coords[~positive]) > RANGE_TOL * (1.0 + np.linalg.norm(p))):
        return np.inf
    return float(np.sum(coords[positive] ** 2 / w[positive]) + q)
