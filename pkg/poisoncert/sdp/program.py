"""
poisoncert/sdp/program.py
Dense cone programs and the builder used to declare them.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from poisoncert.sdp.expression import AffineExpr
from poisoncert.utils.exceptions import ContractViolation

SYMMETRY_TOL = 1e-9


@dataclass(eq=False)
class PsdBlock:
    """constant + Σ x_i coefficients[i] ⪰ 0."""
    constant: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        k = self.constant.shape[0]
        if self.constant.shape != (k, k) or self.coefficients.shape[1:] != (k, k):
            raise ContractViolation("PSD block matrices must be square and agree in size")
        scale = max(1.0, float(np.abs(self.coefficients).max(initial=0.0)), float(np.abs(self.constant).max()))
        if (np.abs(self.constant - self.constant.T).max() > SYMMETRY_TOL * scale
                or np.abs(self.coefficients - np.swapaxes(self.coefficients, 1, 2)).max(initial=0.0)
                > SYMMETRY_TOL * scale):
            raise ContractViolation("PSD block matrices must be symmetric")

    @property
    def size(self) -> int:
        return self.constant.shape[0]


@dataclass(eq=False)
class ConeProgram:
    """minimize cᵀx + offset subject to

    A x + a0 ≥ 0 (componentwise), E x + e0 = 0 and every PSD block ⪰ 0.
    """
    c: np.ndarray
    ineq_matrix: sparse.csr_matrix
    ineq_offset: np.ndarray
    eq_matrix: sparse.csr_matrix
    eq_offset: np.ndarray
    psd_blocks: List[PsdBlock] = field(default_factory=list)
    objective_offset: float = 0.0
    variables: Dict[str, AffineExpr] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.shape[0]
        self.ineq_matrix = sparse.csr_matrix(self.ineq_matrix, shape=(len(self.ineq_offset), n))
        self.eq_matrix = sparse.csr_matrix(self.eq_matrix, shape=(len(self.eq_offset), n))
        self.ineq_offset = np.asarray(self.ineq_offset, dtype=float)
        self.eq_offset = np.asarray(self.eq_offset, dtype=float)
        for block in self.psd_blocks:
            if block.coefficients.shape[0] != n:
                raise ContractViolation("PSD block coefficient count differs from the variable count")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def cone_degree(self) -> int:
        return self.ineq_matrix.shape[0] + sum(b.size for b in self.psd_blocks)

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.objective_offset)

    def violations(self, x: np.ndarray) -> Dict[str, float]:
        """Largest violation of each constraint family at x (0 when satisfied)."""
        out = {
            "ineq": float(max(0.0, -np.min(self.ineq_matrix @ x + self.ineq_offset, initial=np.inf))),
            "eq": float(np.max(np.abs(self.eq_matrix @ x + self.eq_offset), initial=0.0)),
            "psd": 0.0,
        }
        for block in self.psd_blocks:
            M = block.constant + np.tensordot(x, block.coefficients, axes=1)
            out["psd"] = max(out["psd"], float(max(0.0, -np.linalg.eigvalsh(0.5 * (M + M.T))[0])))
        return out

    def variable_value(self, name: str, x: np.ndarray) -> np.ndarray:
        if name not in self.variables:
            raise KeyError(f"unknown variable '{name}'")
        return self.variables[name].value(x)


class ProgramBuilder:
    """Declare variables and constraints with AffineExpr, then build a ConeProgram."""

    def __init__(self, name: str = ""):
        self.name = name
        self._n = 0
        self._variables: Dict[str, AffineExpr] = {}
        self._psd: List[AffineExpr] = []
        self._ineq: List[AffineExpr] = []
        self._eq: List[AffineExpr] = []
        self._objective: Optional[AffineExpr] = None

    @property
    def n_vars(self) -> int:
        return self._n

    def variable(self, name: str, shape: Union[int, Tuple[int, ...]] = (), symmetric: bool = False,
                 nonneg: bool = False) -> AffineExpr:
        """Declare a scalar, vector or matrix variable (symmetric matrices use k(k+1)/2 scalars)."""
        if name in self._variables:
            raise ContractViolation(f"variable '{name}' already declared")
        shape = (shape,) if isinstance(shape, int) else tuple(shape)

        if symmetric:
            if len(shape) != 2 or shape[0] != shape[1]:
                raise ContractViolation("symmetric variables must be square matrices")
            k = shape[0]
            rows, cols = np.triu_indices(k)
            count = rows.size
            data = np.zeros((1 + self._n + count, k, k))
            layers = 1 + self._n + np.arange(count)
            data[layers, rows, cols] = 1.0
            data[layers, cols, rows] = 1.0
        else:
            count = int(np.prod(shape, dtype=int))
            data = np.zeros((1 + self._n + count, count))
            data[1 + self._n + np.arange(count), np.arange(count)] = 1.0
            data = data.reshape((1 + self._n + count,) + shape)

        self._n += count
        expr = AffineExpr(data)
        self._variables[name] = expr
        if nonneg:
            self.add_nonneg(expr)
        return expr

    def add_psd(self, expr: AffineExpr) -> None:
        if expr.ndim != 2 or expr.shape[0] != expr.shape[1]:
            raise ContractViolation(f"PSD constraint needs a square matrix, got shape {expr.shape}")
        self._psd.append(expr)

    def add_nonneg(self, expr) -> None:
        """expr ≥ 0 componentwise."""
        self._ineq.append(AffineExpr.lift(expr).flatten())

    def add_zero(self, expr) -> None:
        """expr = 0 componentwise."""
        self._eq.append(AffineExpr.lift(expr).flatten())

    def minimize(self, expr) -> None:
        expr = AffineExpr.lift(expr)
        if expr.shape != ():
            raise ContractViolation("objective must be a scalar expression")
        self._objective = expr

    def build(self) -> ConeProgram:
        if self._objective is None:
            raise ContractViolation("no objective declared")
        n = self._n

        def stack(exprs: List[AffineExpr]):
            if not exprs:
                return sparse.csr_matrix((0, n)), np.zeros(0)
            data = np.concatenate([e.padded(n).data for e in exprs], axis=1)
            return sparse.csr_matrix(data[1:].T), data[0].copy()

        A, a0 = stack(self._ineq)
        E, e0 = stack(self._eq)
        blocks = []
        for expr in self._psd:
            data = expr.padded(n).data
            data = 0.5 * (data + np.swapaxes(data, 1, 2))
            blocks.append(PsdBlock(data[0].copy(), data[1:].copy()))
        objective = self._objective.padded(n).data

        return ConeProgram(
            c=objective[1:].copy(),
            ineq_matrix=A,
            ineq_offset=a0,
            eq_matrix=E,
            eq_offset=e0,
            psd_blocks=blocks,
            objective_offset=float(objective[0]),
            variables={k: v.padded(n) for k, v in self._variables.items()},
            name=self.name,
        )


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def dump_program(program: ConeProgram, path: Path) -> None:
    """Write a plain-text sparse listing for cross-checking with external solvers.

    Header lines start with '#'. Every other line is one nonzero:
    `block row col var coefficient`, where block is `obj`, `lin`, `eq` or the
    1-based PSD block number, var is 0 for the constant term and i for x_i
    (1-based), and PSD entries are listed for row ≤ col only.
    """
    lines = [f"# name {program.name or '-'}", f"# variables {program.n_vars}",
             f"# lin {program.ineq_matrix.shape[0]}", f"# eq {program.eq_matrix.shape[0]}"]
    lines += [f"# psd {j + 1} {b.size}" for j, b in enumerate(program.psd_blocks)]

    if program.objective_offset:
        lines.append(f"obj 0 0 0 {_fmt(program.objective_offset)}")
    for i in np.flatnonzero(program.c):
        lines.append(f"obj 0 0 {i + 1} {_fmt(program.c[i])}")

    for tag, matrix, offset in (("lin", program.ineq_matrix, program.ineq_offset),
                                ("eq", program.eq_matrix, program.eq_offset)):
        for row in np.flatnonzero(offset):
            lines.append(f"{tag} {row + 1} 0 0 {_fmt(offset[row])}")
        coo = matrix.tocoo()
        for row, var, val in zip(coo.row, coo.col, coo.data):
            if val != 0.0:
                lines.append(f"{tag} {row + 1} 0 {var + 1} {_fmt(val)}")

    for j, block in enumerate(program.psd_blocks):
        layers = np.concatenate([block.constant[None], block.coefficients], axis=0)
        for var, row, col in zip(*np.nonzero(layers)):
            if row <= col:
                lines.append(f"{j + 1} {row + 1} {col + 1} {var} {_fmt(layers[var, row, col])}")

    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_program(path: Path) -> ConeProgram:
    """Read a listing written by dump_program (variable names are not kept)."""
    sizes: Dict[str, int] = {}
    psd_sizes: Dict[int, int] = {}
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "#":
            if parts[1] == "psd":
                psd_sizes[int(parts[2])] = int(parts[3])
            elif parts[1] in ("variables", "lin", "eq"):
                sizes[parts[1]] = int(parts[2])
            continue
        entries.append((parts[0], int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])))

    n = sizes["variables"]
    c = np.zeros(n)
    offset = 0.0
    lin = np.zeros((sizes["lin"], n + 1))
    eq = np.zeros((sizes["eq"], n + 1))
    blocks = {j: np.zeros((n + 1, k, k)) for j, k in psd_sizes.items()}

    for tag, row, col, var, val in entries:
        if tag == "obj":
            if var == 0:
                offset = val
            else:
                c[var - 1] = val
        elif tag in ("lin", "eq"):
            (lin if tag == "lin" else eq)[row - 1, var] = val
        else:
            block = blocks[int(tag)]
            block[var, row - 1, col - 1] = val
            block[var, col - 1, row - 1] = val

    return ConeProgram(
        c=c,
        ineq_matrix=sparse.csr_matrix(lin[:, 1:]),
        ineq_offset=lin[:, 0],
        eq_matrix=sparse.csr_matrix(eq[:, 1:]),
        eq_offset=eq[:, 0],
        psd_blocks=[PsdBlock(b[0], b[1:]) for _, b in sorted(blocks.items())],
        objective_offset=offset,
    )
