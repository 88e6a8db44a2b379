"""Problem model: objectives, certificates, file format."""

import numpy as np
import pytest

from screlax import (
    Problem,
    ProblemFormatError,
    dual_objective,
    duality_gap,
    kkt_residual,
    lambda_max,
    primal_objective,
    read_problem,
    reference_solve,
    write_problem,
)

from conftest import IDENTITY_U, IDENTITY_X, random_problem


def _random_feasible(rng, problem):
    return np.maximum(rng.standard_normal(problem.n), 0.0)


class TestProblem:
    def test_arrays_normalized(self, identity_problem):
        p = identity_problem
        assert p.A.dtype == np.float64 and p.A.flags.f_contiguous
        assert p.y.dtype == np.float64 and p.y.flags.c_contiguous
        assert p.lam.dtype == np.float64
        assert p.m == 2 and p.n == 2
        assert isinstance(p.eps, float)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="y has shape"):
            Problem(np.eye(2), np.zeros(3), np.zeros(2), 1.0)
        with pytest.raises(ValueError, match="lam has shape"):
            Problem(np.eye(2), np.zeros(2), np.zeros(3), 1.0)
        with pytest.raises(ValueError, match="2-d"):
            Problem(np.ones(4), np.zeros(2), np.zeros(2), 1.0)

    def test_invariants(self):
        with pytest.raises(ValueError, match="nonnegative"):
            Problem(np.eye(2), np.zeros(2), np.array([0.1, -0.1]), 1.0)
        with pytest.raises(ValueError, match="strictly positive"):
            Problem(np.eye(2), np.zeros(2), np.zeros(2), 0.0)
        with pytest.raises(ValueError, match="finite"):
            Problem(np.eye(2), np.array([np.inf, 0.0]), np.zeros(2), 1.0)
        with pytest.raises(ValueError, match="column 1"):
            Problem(np.diag([1.0, 2.0]), np.zeros(2), np.zeros(2), 1.0)


class TestLambdaMax:
    def test_identity(self, identity_problem):
        assert lambda_max(identity_problem) == pytest.approx(1.0, abs=1e-15)

    def test_zero_observation(self):
        p = Problem(np.eye(3), np.zeros(3), np.ones(3), 1.0)
        assert lambda_max(p) == 0.0

    def test_matches_column_scan(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((5, 8))
        A /= np.linalg.norm(A, axis=0)
        y = rng.standard_normal(5)
        p = Problem(A, y, np.zeros(8), 1.0)
        best = -np.inf
        for j in range(8):
            c = 0.0
            for i in range(5):
                c += A[i, j] * y[i]
            best = max(best, c)
        assert lambda_max(p) == pytest.approx(best, abs=1e-15)


class TestObjectives:
    def test_primal_at_zero(self, identity_problem):
        y = identity_problem.y
        assert primal_objective(identity_problem, np.zeros(2)) == pytest.approx(
            0.5 * (y @ y), abs=1e-15
        )

    def test_primal_at_optimum(self, identity_problem):
        assert primal_objective(identity_problem, IDENTITY_X) == pytest.approx(
            0.297273, abs=1e-6
        )

    def test_primal_rejects_negative(self, identity_problem):
        with pytest.raises(ValueError, match="negative"):
            primal_objective(identity_problem, np.array([0.1, -1e-9]))

    def test_dual_at_zero(self, identity_problem):
        assert dual_objective(identity_problem, np.zeros(2)) == pytest.approx(
            0.0, abs=1e-15
        )

    def test_dual_at_optimum(self, identity_problem):
        assert dual_objective(identity_problem, IDENTITY_U) == pytest.approx(
            0.297273, abs=1e-6
        )


class TestDualityGap:
    def test_zero_at_optimal_pair(self, identity_problem):
        assert duality_gap(identity_problem, IDENTITY_X, IDENTITY_U) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_zero_at_lambda_max(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((6, 9))
        A /= np.linalg.norm(A, axis=0)
        y = rng.standard_normal(6)
        p0 = Problem(A, y, np.zeros(9), 0.5)
        lam = np.full(9, lambda_max(p0))
        p = Problem(A, y, lam, 0.5)
        # at lam = lambda_max the origin is optimal and u* = y
        assert duality_gap(p, np.zeros(9), y) == pytest.approx(0.0, abs=1e-12)

    def test_identity_cold_start(self, identity_problem):
        gap = duality_gap(identity_problem, np.zeros(2), identity_problem.y)
        assert gap == pytest.approx(2.45, abs=1e-9)

    def test_weak_duality(self):
        rng = np.random.default_rng(11)
        for seed in range(10):
            p = random_problem(seed, m=8, n=12)
            x = _random_feasible(rng, p)
            u = rng.standard_normal(p.m)
            assert duality_gap(p, x, u) >= -1e-12

    def test_dual_strong_concavity(self):
        # D is 1-strongly concave: interpolation beats the chord by
        # 0.5*t*(1-t)*||u1 - u2||^2
        rng = np.random.default_rng(5)
        p = random_problem(4, m=8, n=12)
        for _ in range(10):
            u1 = rng.standard_normal(p.m)
            u2 = rng.standard_normal(p.m)
            t = rng.uniform(0.1, 0.9)
            mid = dual_objective(p, t * u1 + (1 - t) * u2)
            chord = t * dual_objective(p, u1) + (1 - t) * dual_objective(p, u2)
            d = u1 - u2
            assert mid >= chord + 0.5 * t * (1 - t) * (d @ d) - 1e-9


class TestKkt:
    def test_zero_at_identity_optimum(self, identity_problem):
        assert kkt_residual(identity_problem, IDENTITY_X) <= 1e-12

    def test_rejects_negative(self, identity_problem):
        with pytest.raises(ValueError, match="negative"):
            kkt_residual(identity_problem, np.array([-0.1, 0.0]))

    def test_tracks_gap(self):
        # small kkt residual at the exact solve goes with a small gap and
        # a visibly positive residual goes with a visibly positive gap
        for seed in range(5):
            p = random_problem(seed, m=10, n=15)
            sol = reference_solve(p)
            assert kkt_residual(p, sol.x_star) <= 1e-9
            assert duality_gap(p, sol.x_star, sol.u_star) <= 1e-10
            x = sol.x_star + 0.1
            r = kkt_residual(p, x)
            g = duality_gap(p, x, p.y - p.A @ x)
            assert r > 1e-3 and g > 1e-6


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        p = random_problem(9, m=6, n=4)
        path = tmp_path / "inst.txt"
        write_problem(p, path)
        q = read_problem(path)
        np.testing.assert_array_equal(p.A, q.A)
        np.testing.assert_array_equal(p.y, q.y)
        np.testing.assert_array_equal(p.lam, q.lam)
        assert p.eps == q.eps

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ProblemFormatError) as ei:
            read_problem(path)
        assert ei.value.lineno == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2 2\n1 0\n0 1\n1 0.2\n0.3 0.3\n0.1\n")
        with pytest.raises(ProblemFormatError, match="header"):
            read_problem(path)
        path.write_text("two 2\n")
        with pytest.raises(ProblemFormatError, match="two integers"):
            read_problem(path)
        path.write_text("0 2\n")
        with pytest.raises(ProblemFormatError, match="positive"):
            read_problem(path)

    def test_wrong_line_count(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("2 2\n1 0\n0 1\n1 0.2\n")
        with pytest.raises(ProblemFormatError, match="non-empty lines"):
            read_problem(path)

    def test_non_numeric_entry(self, tmp_path):
        path = tmp_path / "nan.txt"
        path.write_text("2 2\n1 zero\n0 1\n1 0.2\n0.3 0.3\n0.1\n")
        with pytest.raises(ProblemFormatError) as ei:
            read_problem(path)
        assert ei.value.lineno == 2

    def test_row_width_reported(self, tmp_path):
        path = tmp_path / "wide.txt"
        path.write_text("2 2\n1 0 0\n0 1\n1 0.2\n0.3 0.3\n0.1\n")
        with pytest.raises(ProblemFormatError, match="expected 2 entries"):
            read_problem(path)

    def test_invariant_violation_not_format_error(self, tmp_path):
        # parses fine but lam < 0: a ValueError that is not a format error
        path = tmp_path / "neglam.txt"
        path.write_text("2 2\n1 0\n0 1\n1 0.2\n-0.3 0.3\n0.1\n")
        with pytest.raises(ValueError, match="nonnegative"):
            read_problem(path)
        with pytest.raises(ValueError) as ei:
            read_problem(path)
        assert not isinstance(ei.value, ProblemFormatError)

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "blank.txt"
        path.write_text("\n2 2\n\n1 0\n0 1\n\n1 0.2\n0.3 0.3\n0.1\n\n")
        p = read_problem(path)
        assert p.m == 2 and p.n == 2
