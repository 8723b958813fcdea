"""
tests/test_simulate.py
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
import pytest

from poisoncert.certcore import Ball, ContaminatedStream, EmpiricalSource, GaussianSource, HingeOnTarget, HingeRule
from poisoncert.certcore import MeanRule, SquaredDistance
from poisoncert.certificates import MeanInstance
from poisoncert.simulate import (
    Fgsm,
    GreedyBestResponse,
    LabelFlip,
    NoAttack,
    Pgd,
    dump_thetas,
    estimate_avg_reward,
    fgsm_attack,
    greedy_best_response_mean,
    label_flip_attack,
    parse_policy,
    pgd_attack,
    run_many,
    run_online,
)
from poisoncert.simulate.attacks import lookahead
from poisoncert.utils.exceptions import ContractViolation, SimulationError


@dataclass(frozen=True)
class BrokenPolicy:
    name: str = "broken"

    def bind(self, ctx, rng):
        return lambda theta: np.full(theta.shape, np.nan)


class TestGreedy:

    def test_direction_of_offset(self):
        z = greedy_best_response_mean(np.array([3.0, 4.0]), np.zeros(2), 1.0, 0.1)
        assert np.allclose(z, [0.6, 0.8])

    def test_tie_break(self):
        mu = np.array([1.0, -1.0])
        assert np.allclose(greedy_best_response_mean(mu, mu, 4.0, 0.3), mu + [2.0, 0.0])

    def test_beats_random_points(self):
        rng = np.random.default_rng(0)
        mu, eta, r = np.array([0.5, -0.5]), 0.2, 2.0
        ball = Ball(mu, np.sqrt(r))
        for _ in range(20):
            theta = mu + rng.standard_normal(2)
            best = greedy_best_response_mean(theta, mu, r, eta)

            def expected_loss(z):
                return np.sum(((1 - eta) * (theta - mu) + eta * (z - mu)) ** 2, axis=-1)

            assert expected_loss(best) >= expected_loss(ball.sample(rng, 1000)).max() - 1e-12

    def test_budget_must_be_positive(self):
        with pytest.raises(ContractViolation):
            greedy_best_response_mean(np.zeros(2), np.zeros(2), 0.0, 0.1)


class TestGradientAttacks:

    def test_lookahead_jacobian(self):
        rule = MeanRule(0.5, np.zeros((1, 1)))
        rolled, jac = lookahead(np.array([1.0]), np.array([0.0]), rule, horizon=2)
        assert rolled[0] == pytest.approx(0.25)
        assert jac == pytest.approx(0.75)

    def test_one_step_pgd_is_fgsm(self):
        rule = MeanRule(0.3, np.zeros((2, 2)))
        obj = SquaredDistance(np.zeros(2))
        ball = Ball(np.zeros(2), 1.0)
        theta = np.array([0.4, -0.1])
        assert np.array_equal(pgd_attack(theta, rule, obj, 1, 0.5, ball, rng=3),
                              fgsm_attack(theta, rule, obj, 0.5, ball, rng=3))

    def test_pgd_moves_towards_higher_loss(self):
        rule = MeanRule(0.3, np.zeros((2, 2)))
        obj = SquaredDistance(np.zeros(2))
        ball = Ball(np.zeros(2), 1.0)
        theta = np.array([0.5, 0.0])
        z = pgd_attack(theta, rule, obj, 200, 0.1, ball, rng=0)
        assert z[0] > 0.9
        assert ball.contains(z)

    def test_zero_gradient_returns_start(self):
        rule = HingeRule(0.1, 0.01)
        obj = HingeOnTarget(np.array([[1.0, 0.0]]))
        ball = Ball(np.zeros(2), 1.0)
        theta = np.array([20.0, 0.0])
        start = ball.sample(np.random.default_rng(9), 1)[0]
        assert np.array_equal(fgsm_attack(theta, rule, obj, 1.0, ball, rng=9), start)

    def test_label_flip(self):
        stream = ContaminatedStream(0.1, EmpiricalSource(np.array([[0.3, -0.4]])))
        assert np.allclose(label_flip_attack(stream, 0), [-0.3, 0.4])

    def test_invalid_parameters(self):
        with pytest.raises(ContractViolation):
            Pgd(steps=0)
        with pytest.raises(ContractViolation):
            Fgsm(step=-1.0)

    def test_parse_policy(self):
        assert isinstance(parse_policy("none"), NoAttack)
        assert parse_policy("label-flip-fixed").fixed
        assert parse_policy("pgd", step=0.3, steps=4) == Pgd(steps=4, step=0.3)
        with pytest.raises(ContractViolation):
            parse_policy("gauss")

    def test_greedy_needs_mean_rule(self, tiny_points):
        stream = ContaminatedStream(0.5, EmpiricalSource(tiny_points))
        with pytest.raises(ContractViolation):
            run_online(HingeRule(0.1, 0.5), stream, HingeOnTarget(tiny_points), GreedyBestResponse(), 10, 0, 0)


class TestRunOnline:

    def test_clean_contraction(self):
        mu = np.array([2.0, -1.0])
        inst = MeanInstance(mu, np.zeros((2, 2)), 0.9, np.zeros((2, 2)), 0.0)
        run = run_online(inst.rule(), inst.stream(), inst.objective(), NoAttack(), 200, 10, 0, theta0=mu + 1.0)
        assert run.avg_adv_loss <= 1e-6
        assert run.poisoned_steps == 0

    def test_seed_determinism(self, mean_2d):
        args = (mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), Pgd(steps=3), 300, 50, 5)
        first = run_online(*args, theta0=mean_2d.mu, record=True)
        second = run_online(*args, theta0=mean_2d.mu, record=True)
        assert np.array_equal(first.thetas, second.thetas)
        assert first.avg_adv_loss == second.avg_adv_loss

    @pytest.mark.parametrize("policy", [Fgsm(), Pgd(steps=5, step=0.3), LabelFlip(), LabelFlip(fixed=True)])
    def test_hinge_norm_bound(self, tiny_points, policy):
        rule = HingeRule(0.5, 0.5)
        stream = ContaminatedStream(0.3, EmpiricalSource(tiny_points))
        run = run_online(rule, stream, HingeOnTarget(tiny_points), policy, 500, 100, 1, record=True)
        assert np.max(np.linalg.norm(run.thetas, axis=1)) <= 1.0 / rule.sigma + 1e-9
        assert run.max_norm <= 1.0 / rule.sigma + 1e-9

    def test_hinge_start_outside_ball(self, tiny_points):
        stream = ContaminatedStream(0.3, EmpiricalSource(tiny_points))
        with pytest.raises(ContractViolation):
            run_online(HingeRule(0.5, 0.5), stream, HingeOnTarget(tiny_points), NoAttack(), 10, 0, 0,
                       theta0=np.array([5.0, 0.0]))

    def test_bad_horizon(self, mean_2d):
        with pytest.raises(ContractViolation):
            run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 10, 10, 0)

    def test_non_finite_policy_output(self, mean_2d):
        with pytest.raises(SimulationError) as info:
            run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), BrokenPolicy(), 500, 0, 0)
        assert info.value.step >= 0

    def test_greedy_beats_no_attack(self):
        inst = MeanInstance(np.zeros(2), 0.5 * np.eye(2), 0.1, np.zeros((2, 2)), 0.2, r=4.0)
        seeds = [0, 1, 2, 3]
        common = (inst.rule(), inst.stream(), inst.objective())
        greedy = run_many(*common, GreedyBestResponse(), 3000, 500, seeds, inst.mu, inst.adversarial_set())
        clean = run_many(*common, NoAttack(), 3000, 500, seeds, inst.mu, inst.adversarial_set())
        assert estimate_avg_reward(greedy)[0] > estimate_avg_reward(clean)[0]

    @pytest.mark.slow
    def test_stationary_mean(self):
        mu = np.array([1.0, -2.0])
        inst = MeanInstance(mu, np.eye(2), 0.2, 0.5 * np.eye(2), 0.0)
        runs = run_many(inst.rule(), inst.stream(), inst.objective(), NoAttack(), 4000, 1000, list(range(32)),
                        theta0=mu, record=True)
        means = np.array([run.thetas[1000:].mean(axis=0) for run in runs])
        stderr = means.std(axis=0, ddof=1) / np.sqrt(len(runs))
        assert np.all(np.abs(means.mean(axis=0) - mu) <= 4 * stderr + 1e-12)


class TestEstimate:

    def test_duplicate_runs_have_zero_stderr(self, mean_2d):
        run = run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 100, 10, 3,
                         theta0=mean_2d.mu)
        mean, stderr = estimate_avg_reward([run, run])
        assert mean == run.avg_adv_loss
        assert stderr == 0.0

    def test_needs_two_runs(self, mean_2d):
        run = run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 50, 0, 0)
        with pytest.raises(ContractViolation):
            estimate_avg_reward([run])

    def test_mismatched_configurations(self, mean_2d):
        common = (mean_2d.rule(), mean_2d.stream(), mean_2d.objective())
        first = run_online(*common, NoAttack(), 50, 0, 0)
        second = run_online(*common, NoAttack(), 60, 0, 1)
        with pytest.raises(ContractViolation):
            estimate_avg_reward([first, second])

    def test_run_many_keeps_seed_order(self, mean_2d):
        runs = run_many(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 50, 0, [4, 2, 9],
                        threads=2)
        assert [run.seed for run in runs] == [4, 2, 9]

    def test_dump_thetas(self, mean_2d, tmp_path):
        run = run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 20, 0, 0, record=True)
        frame = pd.read_csv(dump_thetas(run, tmp_path / "thetas.csv"))
        assert list(frame.columns) == ["step", "theta0", "theta1"]
        assert len(frame) == 21

    def test_dump_needs_recording(self, mean_2d, tmp_path):
        run = run_online(mean_2d.rule(), mean_2d.stream(), mean_2d.objective(), NoAttack(), 20, 0, 0)
        with pytest.raises(ContractViolation):
            dump_thetas(run, tmp_path / "thetas.csv")


def test_gaussian_source_sampling_shape():
    source = GaussianSource(np.zeros(3), np.eye(3))
    assert source.sample(np.random.default_rng(0), 5).shape == (5, 3)
