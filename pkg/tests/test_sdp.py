"""
tests/test_sdp.py
"""

import numpy as np
import pytest

from poisoncert.sdp import (
    AffineExpr,
    ProgramBuilder,
    bmat,
    concatenate,
    dump_program,
    load_program,
    matrix_fractional_epigraph,
    matrix_fractional_program,
    matrix_fractional_value,
    solve,
)
from poisoncert.sdp.solver import _ConeVector
from poisoncert.utils.exceptions import ContractViolation


class TestAffineExpr:

    def test_arithmetic_and_value(self):
        builder = ProgramBuilder()
        x = builder.variable("x", 2)
        expr = 2.0 * x + np.array([1.0, -1.0])
        assert np.allclose(expr.value(np.array([3.0, 4.0])), [7.0, 7.0])

    def test_scalar_times_matrix_broadcasts(self):
        builder = ProgramBuilder()
        nu = builder.variable("nu")
        expr = nu * np.eye(2)
        assert expr.shape == (2, 2)
        assert np.allclose(expr.value(np.array([3.0])), 3.0 * np.eye(2))

    def test_symmetric_variable(self):
        builder = ProgramBuilder()
        X = builder.variable("X", (2, 2), symmetric=True)
        assert builder.n_vars == 3
        value = X.value(np.array([1.0, 2.0, 3.0]))
        assert np.allclose(value, value.T)

    def test_product_of_variables_rejected(self):
        builder = ProgramBuilder()
        x = builder.variable("x")
        y = builder.variable("y")
        with pytest.raises(ContractViolation):
            x * y

    def test_bmat_and_concatenate(self):
        builder = ProgramBuilder()
        t = builder.variable("t")
        M = bmat([[1.0, 2.0], [2.0, t]])
        assert M.shape == (2, 2)
        v = concatenate([np.ones(2), t.reshape(1)])
        assert v.shape == (3,)
        assert isinstance(AffineExpr.lift(3.0), AffineExpr)

    def test_duplicate_variable(self):
        builder = ProgramBuilder()
        builder.variable("x")
        with pytest.raises(ContractViolation):
            builder.variable("x")


class TestSolver:

    def test_linear_bound(self):
        builder = ProgramBuilder("lp")
        x = builder.variable("x")
        builder.add_nonneg(x - 1.0)
        builder.minimize(x)
        solution = solve(builder.build())
        assert solution.is_optimal
        assert solution.objective_value == pytest.approx(1.0, abs=1e-5)
        assert float(solution.value("x")) == pytest.approx(1.0, abs=1e-5)

    def test_trace_above_identity(self):
        builder = ProgramBuilder("trace")
        X = builder.variable("X", (3, 3), symmetric=True)
        builder.add_psd(X - np.eye(3))
        builder.minimize(X.trace())
        solution = solve(builder.build())
        assert solution.is_optimal
        assert solution.objective_value == pytest.approx(3.0, rel=1e-5)

    def test_schur_complement(self):
        builder = ProgramBuilder("schur")
        t = builder.variable("t")
        builder.add_psd(bmat([[1.0, 2.0], [2.0, t]]))
        builder.minimize(t)
        assert solve(builder.build()).objective_value == pytest.approx(4.0, rel=1e-5)

    def test_infeasible_program(self):
        builder = ProgramBuilder("infeasible")
        x = builder.variable("x")
        builder.add_nonneg(x - 1.0)
        builder.add_nonneg(-x)
        builder.minimize(x)
        assert solve(builder.build()).status != "optimal"

    def test_needs_cone_constraints(self):
        builder = ProgramBuilder()
        x = builder.variable("x")
        builder.minimize(x)
        with pytest.raises(ContractViolation):
            solve(builder.build())

    def test_dump_and_load(self, tmp_path):
        builder = ProgramBuilder("roundtrip")
        t = builder.variable("t")
        builder.add_psd(bmat([[1.0, 2.0], [2.0, t]]))
        builder.minimize(t)
        path = tmp_path / "program.txt"
        dump_program(builder.build(), path)
        assert solve(load_program(path)).objective_value == pytest.approx(4.0, rel=1e-5)

    def test_dump_writes_plain_decimals(self, tmp_path):
        builder = ProgramBuilder("decimals")
        x = builder.variable("x")
        builder.add_nonneg(x - 0.1 - 0.2)
        builder.minimize(x / 3.0)
        path = tmp_path / "program.txt"
        program = builder.build()
        dump_program(program, path)
        text = path.read_text(encoding="utf-8")
        assert "np.float64" not in text
        loaded = load_program(path)
        assert loaded.c[0] == program.c[0]
        assert loaded.ineq_offset[0] == program.ineq_offset[0]

    @pytest.mark.parametrize("alpha", [0.5, 3.0])
    def test_objective_scaling(self, alpha):
        builder = ProgramBuilder("scaled")
        t = builder.variable("t")
        builder.add_psd(bmat([[1.0, 2.0], [2.0, t]]))
        builder.minimize(alpha * t)
        solution = solve(builder.build())
        assert solution.objective_value == pytest.approx(4.0 * alpha, rel=1e-5)
        assert float(solution.value("t")) == pytest.approx(4.0, rel=1e-5)

    def test_ill_conditioned_epigraph_solves(self):
        solution = solve(matrix_fractional_program([1.0, 1e-3], np.diag([1.0, 1e-6]), 0.0))
        assert solution.objective_value == pytest.approx(2.0, rel=1e-4)

    def test_interior_check(self):
        inside = _ConeVector(np.array([1.0]), [np.eye(2)])
        boundary = _ConeVector(np.array([1.0]), [np.diag([1.0, 0.0])])
        negative = _ConeVector(np.array([-1.0]), [np.eye(2)])
        assert inside.is_interior()
        assert not boundary.is_interior()
        assert not negative.is_interior()


class TestEpigraph:

    @pytest.mark.parametrize("p, D, q, expected", [
        ([3.0, 4.0], np.eye(2), 0.0, 25.0),
        ([2.0, 0.0], 2.0 * np.eye(2), 5.0, 7.0),
    ])
    def test_fixed_data(self, p, D, q, expected):
        solution = solve(matrix_fractional_program(p, D, q))
        assert solution.objective_value == pytest.approx(expected, rel=1e-5)
        assert matrix_fractional_value(np.asarray(p), D, q) == pytest.approx(expected)

    def test_random_psd_matches_linear_solve(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((4, 4))
        D = M @ M.T + 0.5 * np.eye(4)
        p = rng.standard_normal(4)
        expected = float(p @ np.linalg.solve(D, p)) + 1.5
        solution = solve(matrix_fractional_program(p, D, 1.5))
        assert solution.objective_value == pytest.approx(expected, rel=1e-6, abs=1e-6)

    def test_value_outside_range_is_infinite(self):
        assert matrix_fractional_value(np.array([1.0, 1.0]), np.diag([1.0, 0.0])) == np.inf
        assert matrix_fractional_value(np.array([1.0, 0.0]), np.diag([1.0, 0.0])) == pytest.approx(1.0)
        assert matrix_fractional_value(np.zeros(2), np.diag([1.0, -1.0])) == np.inf

    def test_dimension_mismatch(self):
        builder = ProgramBuilder()
        with pytest.raises(ContractViolation):
            matrix_fractional_epigraph(builder, np.ones(3), np.eye(2), 0.0)
