"""
tests/test_mean_certificate.py
"""

import numpy as np
import pytest

from poisoncert.certcore import QuadraticMultiplier, lagrangian_value, verify_certificate
from poisoncert.certificates import MeanDualPoint, MeanInstance, benign_loss, certify_mean, eval_g, solve_mean_dual
from poisoncert.certificates.mean import build_mean_program, g_affine_in_S, stationary_covariance_candidates
from poisoncert.utils.exceptions import ContractViolation


def feasible_dual(d: int) -> MeanDualPoint:
    """A = 4I, ν = 2 keeps D positive definite for η = 0.5 and every ε ≤ 0.5."""
    return MeanDualPoint(4.0 * np.eye(d), np.linspace(-0.2, 0.3, d), 2.0)


class TestMeanInstance:

    def test_rejects_bad_step(self):
        with pytest.raises(ContractViolation):
            MeanInstance([0.0], [[1.0]], 1.0, [[0.0]], 0.1)

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ContractViolation):
            MeanInstance([0.0, 0.0], np.diag([1.0, -1.0]), 0.5, np.zeros((2, 2)), 0.1)

    def test_adversarial_set(self, mean_2d):
        ball = mean_2d.adversarial_set()
        assert np.allclose(ball.center, mean_2d.mu)
        assert ball.radius == pytest.approx(1.0)


class TestEvalG:

    def test_zero_dual_is_infeasible(self):
        inst = MeanInstance([0.0], [[1.0]], 0.5, [[0.0]], 0.0)
        assert eval_g(MeanDualPoint([[0.0]], [0.0], 0.0), inst) == np.inf

    def test_hand_computed_value(self):
        inst = MeanInstance([0.0], [[1.0]], 0.5, [[0.0]], 0.0, r=1.0)
        assert eval_g(MeanDualPoint([[2.0]], [0.0], 0.1), inst) == pytest.approx(0.6)

    def test_negative_budget_multiplier(self, mean_1d):
        assert eval_g(MeanDualPoint([[4.0]], [0.0], -0.1), mean_1d) == np.inf

    def test_dominates_lagrangian_in_budget(self, mean_2d):
        dual = feasible_dual(2)
        g = eval_g(dual, mean_2d)
        lam = dual.multiplier()
        rng = np.random.default_rng(4)
        thetas = mean_2d.mu + 3.0 * rng.standard_normal((200, 2))
        zs = mean_2d.adversarial_set().sample(rng, 200)
        for theta, z in zip(thetas, zs):
            value = lagrangian_value(lam, theta, z, mean_2d.rule(), mean_2d.stream(), mean_2d.objective())
            assert value <= g + 1e-9

    def test_dominates_verified_bound(self, mean_2d, fast_search):
        dual = feasible_dual(2)
        verification = verify_certificate(dual.multiplier(), mean_2d.rule(), mean_2d.stream(), mean_2d.objective(),
                                          mean_2d.domain(), mean_2d.adversarial_set(), fast_search)
        assert verification.bound <= eval_g(dual, mean_2d) * (1 + 1e-5) + 1e-8

    def test_convex_in_epsilon(self, mean_2d):
        dual = feasible_dual(2)
        low, high = eval_g(dual, mean_2d.with_updates(epsilon=0.05)), eval_g(dual, mean_2d.with_updates(epsilon=0.45))
        middle = eval_g(dual, mean_2d.with_updates(epsilon=0.25))
        assert np.isfinite(middle)
        assert middle <= 0.5 * (low + high) + 1e-9

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_convex_along_dual_segments(self, mean_2d, seed):
        rng = np.random.default_rng(seed)

        def random_dual():
            M = 0.5 * rng.standard_normal((2, 2))
            return MeanDualPoint(4.0 * np.eye(2) + M @ M.T, rng.standard_normal(2), rng.uniform(2.0, 3.0))

        u, v = random_dual(), random_dual()
        gu, gv = eval_g(u, mean_2d), eval_g(v, mean_2d)
        assert np.isfinite(gu) and np.isfinite(gv)
        for t in (0.25, 0.5, 0.75):
            assert eval_g(u.combine(v, t), mean_2d) <= t * gu + (1 - t) * gv + 1e-8

    def test_curved_in_epsilon(self):
        # D and p both move with ε, so the fixed-dual value bends upward
        dual = MeanDualPoint([[4.0]], [1.0], 2.0)
        inst = MeanInstance([0.0], [[1.0]], 0.5, [[0.0]], 0.0, r=1.0)
        g0, g1, g2 = (eval_g(dual, inst.with_updates(epsilon=e)) for e in (0.0, 0.2, 0.4))
        assert g0 == pytest.approx(3.0 + 0.0625 * 0.5)
        assert g0 + g2 - 2.0 * g1 > 1e-4

    def test_translation_covariant(self, mean_2d):
        shift = np.array([1.5, -0.7])
        dual = feasible_dual(2)
        moved = MeanDualPoint(dual.A, dual.b - 2.0 * dual.A @ shift, dual.nu)
        shifted = mean_2d.with_updates(mu=mean_2d.mu + shift)
        assert eval_g(moved, shifted) == pytest.approx(eval_g(dual, mean_2d), rel=1e-9, abs=1e-9)

    def test_affine_in_defense(self, mean_2d):
        dual = feasible_dual(2)
        g0, slope = g_affine_in_S(dual, mean_2d)
        assert eval_g(dual, mean_2d) == pytest.approx(g0 + np.sum(slope * mean_2d.S))

    def test_combine(self):
        a = MeanDualPoint(np.eye(2), np.zeros(2), 1.0)
        b = MeanDualPoint(3.0 * np.eye(2), np.ones(2), 3.0)
        mixed = a.combine(b, 0.5)
        assert np.allclose(mixed.A, 2.0 * np.eye(2))
        assert mixed.nu == pytest.approx(2.0)


class TestSolve:

    def test_program_variables(self, mean_2d):
        program = build_mean_program(mean_2d).build()
        assert set(program.variables) == {"A", "b", "nu", "t"}
        assert len(program.psd_blocks) == 1
        assert program.psd_blocks[0].size == 2 * mean_2d.dim + 1

    def test_solver_value_matches_eval_g(self, mean_1d):
        dual, solution = solve_mean_dual(mean_1d)
        assert dual.nu >= 0.0
        assert eval_g(dual, mean_1d) == pytest.approx(solution.objective_value, rel=1e-3, abs=1e-5)

    def test_solver_beats_hand_dual(self, mean_1d):
        _, solution = solve_mean_dual(mean_1d)
        assert solution.objective_value <= eval_g(feasible_dual(1), mean_1d) * (1 + 1e-5) + 1e-6

    def test_certificate_translation_invariant(self, mean_2d):
        shift = np.array([4.0, -3.0])
        _, base = solve_mean_dual(mean_2d)
        _, moved = solve_mean_dual(mean_2d.with_updates(mu=mean_2d.mu + shift))
        assert moved.objective_value == pytest.approx(base.objective_value, rel=1e-5, abs=1e-6)

    def test_monotone_in_budget(self, mean_1d):
        values = [solve_mean_dual(mean_1d.with_updates(r=r))[1].objective_value for r in (0.25, 1.0, 4.0)]
        assert values[0] <= values[1] + 1e-5 * (1 + abs(values[1]))
        assert values[1] <= values[2] + 1e-5 * (1 + abs(values[2]))


class TestCertifyMean:

    def test_contracting_clean_dynamics(self, fast_search):
        inst = MeanInstance([3.0], [[0.0]], 0.9, [[0.0]], 0.0, r=1.0)
        result = certify_mean(inst, tol=1e-6, search=fast_search)
        assert result.verified >= -1e-6
        assert result.verified <= 0.01
        assert result.solver_value <= 0.01

    def test_result_fields(self, mean_1d, fast_search):
        result = certify_mean(mean_1d, search=fast_search)
        assert result.kind == "mean"
        assert result.certificate == result.verified
        assert isinstance(result.multiplier, QuadraticMultiplier)
        assert result.metadata["d"] == 1
        assert result.to_dict()["duals"]["nu"] >= 0.0
        assert result.verified <= result.solver_value * (1 + 1e-3) + 1e-5

    @pytest.mark.slow
    def test_dominates_simulated_attacks(self, fast_search):
        from poisoncert.meta import TaskPrior, sample_task
        from poisoncert.simulate import GreedyBestResponse, Pgd, estimate_avg_reward, run_many

        mu, Sigma = sample_task(TaskPrior(d=3), 7)
        inst = MeanInstance(mu, Sigma, 0.1, np.zeros((3, 3)), 0.05)
        result = certify_mean(inst, search=fast_search)
        for policy in (GreedyBestResponse(), Pgd(steps=5, step=0.2)):
            runs = run_many(inst.rule(), inst.stream(), inst.objective(), policy, 4000, 1000, [1, 2, 3],
                            theta0=inst.mu, adv_set=inst.adversarial_set())
            mean, stderr = estimate_avg_reward(runs)
            assert mean <= result.verified + 3 * stderr


class TestBenignLoss:

    @pytest.mark.parametrize("eta, S, expected", [
        (0.3, np.zeros((2, 2)), 0.0),
        (0.1, np.eye(3), 0.03),
        (0.5, np.diag([1.0, 3.0]), 1.0),
    ])
    def test_values(self, eta, S, expected):
        assert benign_loss(eta, S) == pytest.approx(expected)

    def test_rejects_indefinite(self):
        with pytest.raises(ContractViolation):
            benign_loss(0.1, np.diag([1.0, -1.0]))

    def test_stationary_candidates(self):
        candidates = stationary_covariance_candidates(0.5, np.eye(2), np.eye(2))
        assert np.allclose(candidates["quoted"], 0.25 * np.eye(2))
        assert np.allclose(candidates["fixed_point"], (0.5 * 2.0 / 1.5) * np.eye(2))
