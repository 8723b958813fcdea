"""
poisoncert/certificates/__init__.py
Certificates for mean estimation and linear classification.
"""

from poisoncert.certificates.classification import (
    ClassDualVars,
    ClassInstance,
    build_opt1,
    build_opt2,
    certify_class,
)
from poisoncert.certificates.mean import (
    MeanDualPoint,
    MeanInstance,
    benign_loss,
    certify_mean,
    eval_g,
    solve_mean_dual,
)
from poisoncert.certificates.relaxation import brute_force_inner_sup, mccormick_envelopes
from poisoncert.certificates.result import CertificateResult

__all__ = [
    "CertificateResult",
    "ClassDualVars",
    "ClassInstance",
    "MeanDualPoint",
    "MeanInstance",
    "benign_loss",
    "brute_force_inner_sup",
    "build_opt1",
    "build_opt2",
    "certify_class",
    "certify_mean",
    "eval_g",
    "mccormick_envelopes",
    "solve_mean_dual",
]
