"""
poisoncert/__init__.py

poisoncert computes certified upper bounds on the long-run loss an online
learner can be driven to by an adversary who poisons a fraction of its data
stream, and checks those bounds against simulated attacks.

Usage:
    from poisoncert import MeanInstance, certify_mean

    result = certify_mean(MeanInstance(mu, Sigma, eta=0.1, S=S, epsilon=0.05))
    print(result.certificate)
"""

from poisoncert.__version__ import __version__
from poisoncert.certificates import (
    CertificateResult,
    ClassInstance,
    MeanInstance,
    certify_class,
    certify_mean,
)
from poisoncert.meta import MetaConfig, TaskPrior, meta_train
from poisoncert.simulate import estimate_avg_reward, run_online

__all__ = [
    "__version__",
    "CertificateResult",
    "ClassInstance",
    "MeanInstance",
    "MetaConfig",
    "TaskPrior",
    "certify_class",
    "certify_mean",
    "estimate_avg_reward",
    "meta_train",
    "run_online",
]
