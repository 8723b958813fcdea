"""
poisoncert/meta/__init__.py
Meta-learning the mean-estimation defense.
"""

from poisoncert.meta.evaluation import (
    eval_defense,
    eval_defense_per_task,
    observed_stationary_covariance,
    select_kappa,
)
from poisoncert.meta.priors import TaskPrior, sample_task, sample_tasks
from poisoncert.meta.training import MetaConfig, MetaTrace, closed_form_defense_step, meta_train, training_tasks

__all__ = [
    "MetaConfig",
    "MetaTrace",
    "TaskPrior",
    "closed_form_defense_step",
    "eval_defense",
    "eval_defense_per_task",
    "meta_train",
    "observed_stationary_covariance",
    "sample_task",
    "sample_tasks",
    "select_kappa",
    "training_tasks",
]
