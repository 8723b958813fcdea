"""
tests/test_meta.py
"""

import numpy as np
import pytest
from pydantic import ValidationError

from poisoncert.meta import (
    MetaConfig,
    TaskPrior,
    closed_form_defense_step,
    eval_defense,
    eval_defense_per_task,
    meta_train,
    observed_stationary_covariance,
    sample_task,
    sample_tasks,
    select_kappa,
    training_tasks,
)
from poisoncert.meta.training import defense_cost, initial_defense, solve_defense_step
from poisoncert.utils.exceptions import ContractViolation
from poisoncert.simulate import GreedyBestResponse, NoAttack


class TestPrior:

    def test_default_dof(self):
        assert TaskPrior(d=3).dof == 5.0

    def test_dof_must_exceed_dimension(self):
        with pytest.raises(ValidationError):
            TaskPrior(d=3, dof=1.5)

    def test_same_seed_same_task(self):
        prior = TaskPrior(d=2)
        mu1, sigma1 = sample_task(prior, 11)
        mu2, sigma2 = sample_task(prior, 11)
        assert np.array_equal(mu1, mu2)
        assert np.array_equal(sigma1, sigma2)

    def test_tasks_are_symmetric_positive_definite(self):
        for _, sigma in sample_tasks(TaskPrior(d=3), 10, seed=0):
            assert np.allclose(sigma, sigma.T)
            assert np.linalg.eigvalsh(sigma).min() > 0

    def test_moments(self):
        d, count = 2, 4000
        tasks = sample_tasks(TaskPrior(d=d, dof=d + 6), count, seed=1)
        mus = np.array([mu for mu, _ in tasks])
        assert np.all(np.abs(mus.mean(axis=0)) <= 4.0 / np.sqrt(count))
        mean_sigma = np.mean([sigma for _, sigma in tasks], axis=0)
        # E[Σ] = scale·I / (dof − d − 1)
        assert np.allclose(mean_sigma, np.eye(d) / 5.0, atol=0.02)


class TestDefenseStep:

    def test_positive_cost_gives_no_noise(self):
        cost = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.array_equal(closed_form_defense_step(cost, 10.0), np.zeros((2, 2)))
        assert np.allclose(solve_defense_step(cost, 10.0), 0.0, atol=1e-5)

    def test_negative_direction_fills_the_cap(self):
        cost = np.diag([1.0, -2.0])
        expected = np.diag([0.0, 3.0])
        assert np.allclose(closed_form_defense_step(cost, 3.0), expected)
        assert np.allclose(solve_defense_step(cost, 3.0), expected, atol=1e-4)

    def test_isotropic(self):
        assert np.allclose(closed_form_defense_step(np.diag([1.0, -3.0]), 4.0, "isotropic"), 2.0 * np.eye(2))
        assert np.allclose(closed_form_defense_step(np.eye(2), 4.0, "isotropic"), 0.0)

    def test_initial_defense_has_trace_d(self):
        S = initial_defense(3, seed=4)
        assert np.trace(S) == pytest.approx(3.0)
        assert np.linalg.eigvalsh(S).min() >= -1e-12
        assert np.array_equal(initial_defense(3, 4, "isotropic"), np.eye(3))


class TestMetaTrain:

    @pytest.fixture(scope="class")
    def trace(self):
        tasks = sample_tasks(TaskPrior(d=2), 3, seed=0)
        return meta_train(tasks, 0.3, 0.1, 1.0, MetaConfig(T=2, K=3, kappa=1.0))

    def test_criterion_non_increasing(self, trace):
        values = [trace.multiplier_objectives[0]]
        for after_multipliers, after_defense in zip(trace.multiplier_objectives, trace.objectives):
            values.extend([after_multipliers, after_defense])
        for earlier, later in zip(values, values[1:]):
            assert later <= earlier + 1e-4 * (1.0 + abs(earlier))

    def test_learned_defense_is_zero(self, trace):
        assert np.allclose(trace.S, 0.0, atol=1e-5)
        assert not any(trace.cap_active)

    def test_defense_cost_is_positive_definite(self, trace):
        cost = defense_cost(trace.duals, trace.kappa, 0.3)
        assert np.linalg.eigvalsh(cost).min() > 0

    def test_to_dict(self, trace):
        payload = trace.to_dict()
        assert len(payload["objectives"]) == 2
        assert payload["structure"] == "full"
        assert payload["trace_S"] == pytest.approx(float(np.trace(trace.S)))

    def test_needs_tasks(self):
        with pytest.raises(ValueError):
            meta_train([], 0.3, 0.1, 1.0, MetaConfig(T=1))

    def test_tasks_drawn_from_config_prior(self):
        prior = TaskPrior(d=2)
        cfg = MetaConfig(T=1, K=2, seed=5, prior=prior)
        tasks = training_tasks(cfg)
        assert len(tasks) == 2
        for (mu, Sigma), (mu_ref, Sigma_ref) in zip(tasks, sample_tasks(prior, 2, 5)):
            assert np.array_equal(mu, mu_ref)
            assert np.array_equal(Sigma, Sigma_ref)
        trace = meta_train(None, 0.3, 0.1, 1.0, cfg)
        assert len(trace.duals) == 2

    def test_drawing_tasks_needs_prior(self):
        with pytest.raises(ContractViolation):
            meta_train(None, 0.3, 0.1, 1.0, MetaConfig(T=1, K=2))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            MetaConfig(kappa=0.0)
        with pytest.raises(ValidationError):
            MetaConfig(structure="diagonal")


class TestEvaluation:

    def test_no_attack_without_noise_is_zero(self):
        tasks = [(np.array([1.0, 2.0]), np.zeros((2, 2)))]
        loss = eval_defense(np.zeros((2, 2)), tasks, 0.3, 0.2, 1.0, NoAttack(), T=200, burn_in=20)
        assert loss == pytest.approx(0.0, abs=1e-20)

    def test_greedy_is_worse_than_no_attack(self):
        rng = np.random.default_rng(5)
        tasks = [(rng.standard_normal(2), 0.2 * np.eye(2)) for _ in range(3)]
        common = dict(T=2000, burn_in=200, seeds=2)
        greedy = eval_defense_per_task(np.zeros((2, 2)), tasks, 0.1, 0.2, 1.0, GreedyBestResponse(), **common)
        clean = eval_defense_per_task(np.zeros((2, 2)), tasks, 0.1, 0.2, 1.0, NoAttack(), **common)
        assert greedy.shape == (3,)
        assert np.all(greedy > clean)

    def test_observed_stationary_covariance(self):
        report = observed_stationary_covariance(np.zeros(2), np.eye(2), 0.2, 0.5 * np.eye(2), T=4000, burn_in=500)
        assert {"observed", "quoted", "fixed_point", "defense_noise_per_step"} <= set(report)
        assert report["observed"].shape == (2, 2)
        assert np.allclose(report["defense_noise_per_step"], 0.02 * np.eye(2))

    @pytest.mark.slow
    def test_select_kappa(self):
        train = sample_tasks(TaskPrior(d=2), 2, seed=0)
        validation = sample_tasks(TaskPrior(d=2), 2, seed=1)
        best, losses, traces = select_kappa([0.5, 2.0], train, validation, 0.3, 0.1, 1.0, NoAttack(),
                                            cfg=MetaConfig(T=1), T=500, burn_in=50)
        assert best in (0.5, 2.0)
        assert set(losses) == set(traces) == {0.5, 2.0}
        assert losses[best] == min(losses.values())
