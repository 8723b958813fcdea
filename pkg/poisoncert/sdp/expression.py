"""
poisoncert/sdp/expression.py
Affine expressions in the variables of a cone program.

An expression of shape `shape` over n scalar variables is stored as one array
of shape (1 + n, *shape): layer 0 is the constant, layer i the coefficient of
variable i − 1. Expressions created before later variables were declared are
zero-padded when combined.
"""

from numbers import Number
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from poisoncert.utils.exceptions import ContractViolation


class AffineExpr:
    """const + Σ_i x_i · coef_i."""

    # numpy defers every binary operator to the reflected methods below
    __array_ufunc__ = None

    def __init__(self, data: np.ndarray):
        self.data = np.asarray(data, dtype=float)

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, n_vars: int = 0) -> "AffineExpr":
        value = np.asarray(value, dtype=float)
        data = np.zeros((1 + n_vars,) + value.shape)
        data[0] = value
        return cls(data)

    @staticmethod
    def lift(value, n_vars: int = 0) -> "AffineExpr":
        if isinstance(value, AffineExpr):
            return value.padded(max(n_vars, value.n_vars))
        return AffineExpr.constant(value, n_vars)

    # introspection ------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape[1:]

    @property
    def ndim(self) -> int:
        return self.data.ndim - 1

    @property
    def n_vars(self) -> int:
        return self.data.shape[0] - 1

    @property
    def const(self) -> np.ndarray:
        return self.data[0]

    @property
    def coef(self) -> np.ndarray:
        return self.data[1:]

    def padded(self, n_vars: int) -> "AffineExpr":
        if n_vars == self.n_vars:
            return self
        if n_vars < self.n_vars:
            raise ContractViolation("cannot drop variables from an expression")
        pad = np.zeros((n_vars - self.n_vars,) + self.shape)
        return AffineExpr(np.concatenate([self.data, pad], axis=0))

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)[: self.n_vars]
        return self.const + np.tensordot(x, self.coef, axes=1)

    def is_constant(self) -> bool:
        return not np.any(self.coef)

    # arithmetic ---------------------------------------------------------

    def _aligned(self, other) -> Tuple[np.ndarray, np.ndarray]:
        other = AffineExpr.lift(other, self.n_vars)
        n = max(self.n_vars, other.n_vars)
        a, b = self.padded(n).data, other.padded(n).data
        ndim = max(a.ndim, b.ndim)
        a = a.reshape(a.shape[:1] + (1,) * (ndim - a.ndim) + a.shape[1:])
        b = b.reshape(b.shape[:1] + (1,) * (ndim - b.ndim) + b.shape[1:])
        return a, b

    def __add__(self, other) -> "AffineExpr":
        a, b = self._aligned(other)
        return AffineExpr(a + b)

    __radd__ = __add__

    def __sub__(self, other) -> "AffineExpr":
        a, b = self._aligned(other)
        return AffineExpr(a - b)

    def __rsub__(self, other) -> "AffineExpr":
        a, b = self._aligned(other)
        return AffineExpr(b - a)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.data)

    def __mul__(self, other) -> "AffineExpr":
        if isinstance(other, AffineExpr):
            if other.is_constant():
                other = other.const
            elif self.is_constant():
                return other * self.const
            else:
                raise ContractViolation("product of two non-constant expressions is not affine")
        other = np.asarray(other, dtype=float)
        data = self.data
        if other.ndim > self.ndim:
            # scalar or low-rank expression scaling a larger constant
            data = data.reshape(data.shape[:1] + (1,) * (other.ndim - self.ndim) + self.shape)
        return AffineExpr(data * other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "AffineExpr":
        if not isinstance(other, Number):
            raise ContractViolation("expressions can only be divided by scalars")
        return AffineExpr(self.data / float(other))

    def __matmul__(self, other) -> "AffineExpr":
        """expr @ M for a constant M."""
        M = np.asarray(other, dtype=float)
        if self.ndim == 0:
            raise ContractViolation("scalar expressions have no matrix product")
        return AffineExpr(self.data @ M)

    def __rmatmul__(self, other) -> "AffineExpr":
        """M @ expr for a constant M."""
        M = np.asarray(other, dtype=float)
        if self.ndim == 1:
            return AffineExpr(self.data @ M.T)
        if self.ndim == 2:
            return AffineExpr(np.matmul(M, self.data))
        raise ContractViolation("matrix product needs a vector or matrix expression")

    def __getitem__(self, index) -> "AffineExpr":
        if not isinstance(index, tuple):
            index = (index,)
        return AffineExpr(self.data[(slice(None),) + index])

    # reductions and reshapes ---------------------------------------------

    @property
    def T(self) -> "AffineExpr":
        if self.ndim < 2:
            return self
        return AffineExpr(np.swapaxes(self.data, -1, -2))

    def sum(self, axis=None) -> "AffineExpr":
        if axis is None:
            axes = tuple(range(1, self.data.ndim))
        else:
            axes = tuple(a + 1 if a >= 0 else a for a in np.atleast_1d(axis))
        return AffineExpr(self.data.sum(axis=axes))

    def trace(self) -> "AffineExpr":
        if self.ndim != 2 or self.shape[0] != self.shape[1]:
            raise ContractViolation("trace needs a square matrix expression")
        return AffineExpr(np.trace(self.data, axis1=1, axis2=2))

    def inner(self, other) -> "AffineExpr":
        """⟨M, expr⟩ = Σ M_ij expr_ij for a constant M of the same shape."""
        M = np.asarray(other, dtype=float)
        if M.shape != self.shape:
            raise ContractViolation(f"inner product shapes differ: {M.shape} vs {self.shape}")
        return AffineExpr(np.tensordot(self.data, M, axes=self.ndim))

    def reshape(self, *shape) -> "AffineExpr":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return AffineExpr(self.data.reshape((self.data.shape[0],) + tuple(shape)))

    def flatten(self) -> "AffineExpr":
        return self.reshape(-1)

    def as_column(self) -> "AffineExpr":
        return self.reshape(-1, 1)

    def as_row(self) -> "AffineExpr":
        return self.reshape(1, -1)

    def __repr__(self) -> str:
        return f"AffineExpr(shape={self.shape}, n_vars={self.n_vars})"


Operand = Union[AffineExpr, np.ndarray, float]


def _common_vars(items: Iterable) -> int:
    return max([it.n_vars for it in items if isinstance(it, AffineExpr)], default=0)


def bmat(blocks: Sequence[Sequence[Operand]]) -> AffineExpr:
    """Assemble a block matrix from expressions and constants (scalars become 1×1)."""
    n = _common_vars(item for row in blocks for item in row)
    rows = []
    for row in blocks:
        parts = []
        for item in row:
            data = AffineExpr.lift(item, n).padded(n).data
            if data.ndim == 1:
                data = data.reshape(-1, 1, 1)
            if data.ndim != 3:
                raise ContractViolation("block entries must be scalars or matrices; reshape vectors first")
            parts.append(data)
        heights = {p.shape[1] for p in parts}
        if len(heights) != 1:
            raise ContractViolation(f"block row has mismatched heights {sorted(heights)}")
        rows.append(np.concatenate(parts, axis=2))
    widths = {r.shape[2] for r in rows}
    if len(widths) != 1:
        raise ContractViolation(f"block rows have mismatched widths {sorted(widths)}")
    return AffineExpr(np.concatenate(rows, axis=1))


def concatenate(items: Sequence[Operand]) -> AffineExpr:
    """Join vector expressions end to end."""
    n = _common_vars(items)
    parts = [AffineExpr.lift(it, n).padded(n).data for it in items]
    parts = [p.reshape(p.shape[0], -1) for p in parts]
    return AffineExpr(np.concatenate(parts, axis=1))
