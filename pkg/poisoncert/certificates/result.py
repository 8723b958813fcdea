"""
poisoncert/certificates/result.py
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from poisoncert.certcore.types import QuadraticMultiplier


@dataclass
class CertificateResult:
    """Solver bound, independently verified bound and the multiplier behind them.

    `verified` is the certificate of record; `solver_value` may be loose or, when
    the relaxation is off, even invalid.
    """
    kind: str
    solver_value: float
    verified: float
    multiplier: QuadraticMultiplier
    solver_status: str
    gap: float
    verification_converged: bool
    duals: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def certificate(self) -> float:
        return self.verified

    def to_dict(self) -> Dict[str, Any]:
        def plain(value):
            if isinstance(value, np.ndarray):
                return value.tolist()
            if isinstance(value, (np.floating, np.integer)):
                return value.item()
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            return value

        return {
            "kind": self.kind,
            "solver_value": float(self.solver_value),
            "verified": float(self.verified),
            "solver_status": self.solver_status,
            "gap": float(self.gap),
            "verification_converged": bool(self.verification_converged),
            "A": self.multiplier.A.tolist(),
            "b": self.multiplier.b.tolist(),
            "duals": plain(self.duals),
            "metadata": plain(self.metadata),
        }
