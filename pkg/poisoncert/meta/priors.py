"""
poisoncert/meta/priors.py
Task prior for meta-learning the mean-estimation defense.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import stats


class TaskPrior(BaseModel):
    """μ ~ N(0, I_d) and Σ ~ InverseWishart(dof, scale·I_d); dof defaults to d + 2."""

    d: int = Field(ge=1)
    dof: Optional[float] = None
    scale: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_dof(self) -> "TaskPrior":
        if self.dof is None:
            self.dof = float(self.d + 2)
        if self.dof <= self.d - 1:
            raise ValueError(f"inverse-Wishart dof must exceed d - 1 = {self.d - 1}, got {self.dof}")
        return self


def sample_task(prior: TaskPrior, seed) -> Tuple[np.ndarray, np.ndarray]:
    """Draw (μ, Σ); identical seeds give identical tasks."""
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal(prior.d)
    sigma = stats.invwishart.rvs(df=prior.dof, scale=prior.scale * np.eye(prior.d), random_state=rng)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    return mu, 0.5 * (sigma + sigma.T)


def sample_tasks(prior: TaskPrior, count: int, seed: int):
    """`count` independent tasks, task i seeded with (seed, i)."""
    return [sample_task(prior, [seed, i]) for i in range(count)]
