import numpy as np
import pytest

from curveflow.errors import NonFiniteResidual, SingularJacobian, SingularMatrix
from curveflow.solver import ResidualSystem, SolverConfig, SolverReport, lu_solve, solve


def quadratic_system():
    def f(u):
        return np.array([u[0] ** 2 - 4.0, u[1] - u[0]])

    return ResidualSystem(dimension=2, evaluate=f)


class TestLuSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(5)
        np.testing.assert_allclose(lu_solve(np.eye(5), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(
            lu_solve(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([2.0, 8.0])),
            [1.0, 2.0],
        )

    def test_random_well_conditioned_63(self, rng):
        a = rng.standard_normal((63, 63)) + 63.0 * np.eye(63)
        b = rng.standard_normal(63)
        x = lu_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_singular_matrix(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrix):
            lu_solve(a, np.ones(2))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            lu_solve(np.ones((2, 3)), np.ones(2))


class TestSolve:
    def test_linear_system_one_iteration(self):
        c = np.array([2.0, -1.0, 0.5])
        system = ResidualSystem(3, lambda u: u - c)
        report = solve(system, np.zeros(3))
        assert report.converged
        assert report.iterations == 1
        np.testing.assert_allclose(report.solution, c, atol=1e-9)

    def test_quadratic_converges_within_eight_iterations(self):
        config = SolverConfig(rel_tol=1e-12, abs_tol=1e-12)
        report = solve(quadratic_system(), np.array([1.0, 1.0]), config)
        assert report.converged
        assert report.iterations <= 8
        np.testing.assert_allclose(report.solution, [2.0, 2.0], atol=1e-10)

    def test_cubic_at_root_guess(self):
        # F(u) = u^3 with guess 0: residual is already zero; no crash
        system = ResidualSystem(1, lambda u: u**3)
        report = solve(system, np.zeros(1))
        assert report.converged
        assert report.final_residual_norm == 0.0
        assert report.iterations == 0

    def test_quadratic_local_convergence(self):
        # residual norms contract quadratically once below 1e-3 of the start
        config = SolverConfig(rel_tol=1e-300, abs_tol=1e-300, max_iters=6)
        report = solve(quadratic_system(), np.array([1.0, 1.0]), config)
        h = report.history
        r0 = h[0]
        for r_k, r_next in zip(h[1:], h[2:]):
            if 1e-13 < r_k <= 1e-3 * r0:
                assert r_next <= 1.0 * r_k**2

    def test_determinism(self):
        config = SolverConfig()
        reports = [
            solve(quadratic_system(), np.array([1.0, 1.0]), config) for _ in range(2)
        ]
        np.testing.assert_array_equal(reports[0].solution, reports[1].solution)
        assert reports[0].history == reports[1].history
        assert reports[0].iterations == reports[1].iterations

    def test_never_converged_above_tolerance(self):
        # no-root system: |F| is bounded below; budgets exhaust, converged
        # must come back False rather than lying
        system = ResidualSystem(1, lambda u: np.array([u[0] ** 2 + 1.0]))
        report = solve(system, np.array([0.5]), SolverConfig(max_iters=10))
        assert not report.converged
        target = max(1e-12, 1e-6 * (1.0 + report.history[0]))
        assert report.final_residual_norm > target

    def test_non_finite_at_guess(self):
        system = ResidualSystem(1, lambda u: np.array([np.nan]))
        with pytest.raises(NonFiniteResidual):
            solve(system, np.zeros(1))

    def test_singular_jacobian(self):
        # F constant and nonzero: FD Jacobian is exactly zero
        system = ResidualSystem(2, lambda u: np.array([1.0, 1.0]))
        with pytest.raises(SingularJacobian):
            solve(system, np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve(quadratic_system(), np.zeros(3))

    def test_damping_none_still_converges_on_quadratic(self):
        config = SolverConfig(damping="none", rel_tol=1e-10)
        report = solve(quadratic_system(), np.array([1.5, 1.5]), config)
        assert report.converged

    def test_batched_evaluator_matches_loop(self, rng):
        def f(u):
            return np.array([u[0] ** 2 - u[1], u[1] ** 3 - 2.0])

        plain = ResidualSystem(2, f)
        batched = ResidualSystem(2, f, evaluate_many=lambda pts: np.stack([f(p) for p in pts]))
        guess = np.array([1.2, 0.7])
        ra = solve(plain, guess)
        rb = solve(batched, guess)
        np.testing.assert_array_equal(ra.solution, rb.solution)
        assert ra.iterations == rb.iterations

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iters=0)
        with pytest.raises(ValueError):
            SolverConfig(damping="cubic")

    def test_report_invariant(self):
        report = solve(quadratic_system(), np.array([1.0, 1.0]))
        assert isinstance(report, SolverReport)
        if report.converged:
            target = max(1e-12, 1e-6 * (1.0 + report.history[0]))
            assert report.final_residual_norm <= target
