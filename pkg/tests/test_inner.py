"""Tests for the inner trust-region iteration."""

from __future__ import annotations

from unittest.mock import patch

import numpy as np
import pytest

from riptrm.bench.analytic import build_analytic_1d
from riptrm.errors import (
    InvalidInputError,
    InvalidStateError,
    NotStrictlyFeasibleError,
    SolverFailureError,
)
from riptrm.manifolds.euclidean import Euclidean
from riptrm.manifolds.sphere import Sphere
from riptrm.problem.gradcheck import taylor_slope
from riptrm.problem.models import FunctionOracle, PrimalDualPair
from riptrm.problem.rico import RicoProblem
from riptrm.solver.inner import (
    clip_duals,
    clip_interval,
    dual_newton_step,
    inner_solve,
    ratio_regularization,
    reductions,
    stopping_satisfied,
    tr_radius_update,
)
from riptrm.solver.models import (
    InnerConfig,
    InnerEvent,
    InnerStatus,
    StoppingConditions,
)
from riptrm.trs.models import Subsolver, TrsSolution, TrsStatus


def quadratic_oracle(
    a: np.ndarray, b: np.ndarray, c: float = 0.0, name: str = ""
) -> FunctionOracle:
    """``x -> 1/2 x^T A x + b^T x + c``."""
    return FunctionOracle(
        value=lambda x: 0.5 * float(x @ a @ x) + float(b @ x) + c,
        egrad=lambda x: a @ x + b,
        ehess=lambda x, v: a @ v,
        name=name,
    )


def identity_constraint_problem(objective_slope: float = 1.0) -> RicoProblem:
    """``min slope * x`` subject to ``x >= 0`` on the real line."""
    zero = np.zeros((1, 1))
    return RicoProblem(
        Euclidean(1),
        quadratic_oracle(zero, np.array([objective_slope])),
        [quadratic_oracle(zero, np.array([1.0]), name="x")],
    )


class TestTrRadiusUpdate:
    """Radius update rule."""

    def test_poor_agreement_shrinks(self) -> None:
        assert tr_radius_update(1.0, 0.1, 1.0, 0.5, 10.0) == 0.25

    def test_good_agreement_on_boundary_expands(self) -> None:
        assert tr_radius_update(1.0, 1.0, 1.0, 1.0, 10.0) == 2.0

    def test_expansion_is_capped(self) -> None:
        assert tr_radius_update(8.0, 1.0, 1.0, 8.0, 10.0) == 10.0

    def test_moderate_agreement_keeps_radius(self) -> None:
        assert tr_radius_update(1.0, 0.5, 1.0, 1.0, 10.0) == 1.0

    def test_interior_step_keeps_radius(self) -> None:
        assert tr_radius_update(1.0, 1.0, 1.0, 0.5, 10.0) == 1.0

    def test_nonpositive_prediction_shrinks(self) -> None:
        assert tr_radius_update(1.0, 1.0, 0.0, 1.0, 10.0) == 0.25


class TestDualNewtonStep:
    """Dual update of the condensed Newton system."""

    def test_central_point_with_zero_step(self) -> None:
        problem = identity_constraint_problem()
        w = PrimalDualPair(x=np.array([2.0]), lam=np.array([0.5]))

        step = dual_newton_step(problem, w, 1.0, np.zeros(1))

        np.testing.assert_allclose(step, [0.0], atol=1e-15)

    def test_hand_evaluation(self) -> None:
        problem = identity_constraint_problem()
        w = PrimalDualPair(x=np.array([2.0]), lam=np.array([1.0]))

        step = dual_newton_step(problem, w, 1.0, np.array([0.5]))

        np.testing.assert_allclose(step, [-0.75])

    def test_infeasible_point_raises(self) -> None:
        problem = identity_constraint_problem()
        w = PrimalDualPair(x=np.array([0.0]), lam=np.array([1.0]))

        with pytest.raises(NotStrictlyFeasibleError, match="strictly feasible"):
            dual_newton_step(problem, w, 1.0, np.zeros(1))

    def test_matches_uncondensed_newton_system(self) -> None:
        rng = np.random.default_rng(0)
        n, m = 3, 2
        for _ in range(200):
            # Arrange
            b = rng.standard_normal((n, n))
            a_f = b @ b.T + np.eye(n)
            grad_f = rng.standard_normal(n)
            hess_g = []
            constraints = []
            x = rng.standard_normal(n)
            for i in range(m):
                s = rng.standard_normal((n, n))
                h_i = 0.05 * (s + s.T)
                lin = rng.standard_normal(n)
                offset = rng.uniform(0.5, 2.0) - 0.5 * x @ h_i @ x - lin @ x
                hess_g.append(h_i)
                constraints.append(quadratic_oracle(h_i, lin, offset, name=f"g{i}"))
            problem = RicoProblem(
                Euclidean(n), quadratic_oracle(a_f, grad_f), constraints
            )
            lam = rng.uniform(0.5, 2.0, m)
            mu = rng.uniform(0.01, 1.0)
            w = PrimalDualPair(x=x, lam=lam)
            g = problem.constraint_values(x)
            jac = np.array([c.egrad(x) for c in constraints])

            # Act
            basis = problem.manifold.tangent_basis(x)
            h = problem.manifold.operator_matrix(
                x, basis, problem.condensed_operator(w)
            )
            d = np.linalg.solve(h, -problem.barrier_gradient(x, mu))
            dlam = dual_newton_step(problem, w, mu, d)

            # Assert
            hess_lag = a_f - sum(li * hi for li, hi in zip(lam, hess_g, strict=True))
            kkt = np.block([[hess_lag, -jac.T], [lam[:, None] * jac, np.diag(g)]])
            rhs = np.concatenate([-problem.grad_lagrangian(w), mu - lam * g])
            reference = np.linalg.solve(kkt, rhs)
            np.testing.assert_allclose(d, reference[:n], rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(dlam, reference[n:], rtol=1e-10, atol=1e-10)


class TestClipDuals:
    """Safeguard interval for the multipliers."""

    def test_inside_interval_is_unchanged(self) -> None:
        clipped = clip_duals(
            np.array([0.7]), np.array([1.0]), 0.1, np.array([1.0]), 0.5, 1e20
        )

        np.testing.assert_array_equal(clipped, [0.7])

    def test_clamps_to_lower_bound(self) -> None:
        clipped = clip_duals(
            np.array([-0.02]), np.array([1.0]), 0.1, np.array([1.0]), 0.5, 1e20
        )

        np.testing.assert_allclose(clipped, [0.05])

    def test_clamps_to_upper_bound(self) -> None:
        clipped = clip_duals(
            np.array([1e30]), np.array([1.0]), 0.1, np.array([1.0]), 0.5, 1e20
        )

        np.testing.assert_allclose(clipped, [1e21])

    def test_interval_is_positive(self) -> None:
        lower, upper = clip_interval(
            np.array([1e-8, 3.0]), 1e-6, np.array([5.0, 1e-4]), 0.5, 1e20
        )

        assert np.all(lower > 0.0)
        assert np.all(upper > lower)

    def test_nonpositive_constraint_raises(self) -> None:
        with pytest.raises(NotStrictlyFeasibleError, match="strictly positive"):
            clip_duals(np.ones(1), np.ones(1), 0.1, np.zeros(1), 0.5, 1e20)


class TestStoppingSatisfied:
    """Inner stopping test."""

    def test_central_point(self) -> None:
        # Arrange
        problem, _ = build_analytic_1d()
        w = PrimalDualPair(x=np.array([1.5]), lam=np.array([1.0]))
        conds = StoppingConditions(second_order=True)

        # Act
        check = stopping_satisfied(problem, w, 0.5, conds)

        # Assert
        assert check.satisfied
        assert check.min_eig == pytest.approx(2.0)

    def test_active_constraint_fails(self) -> None:
        problem, _ = build_analytic_1d()
        w = PrimalDualPair(x=np.array([1.0]), lam=np.array([1.0]))

        check = stopping_satisfied(problem, w, 0.0, StoppingConditions())

        assert not check.feasible
        assert not check.satisfied

    def test_second_order_flag(self) -> None:
        # Arrange
        concave = quadratic_oracle(-np.eye(1), np.zeros(1))
        problem = RicoProblem(Euclidean(1), concave)
        w = PrimalDualPair(x=np.zeros(1), lam=np.zeros(0))

        # Act
        first_order = stopping_satisfied(problem, w, 0.1, StoppingConditions())
        second_order = stopping_satisfied(
            problem, w, 0.1, StoppingConditions(second_order=True)
        )

        # Assert
        assert first_order.satisfied
        assert first_order.min_eig is None
        assert not second_order.satisfied
        assert second_order.min_eig == pytest.approx(-1.0)


class TestReductions:
    """Actual and predicted merit decrease."""

    def test_zero_step(self) -> None:
        problem, w = build_analytic_1d()

        assert reductions(problem, w, 0.1, np.zeros(1)) == (0.0, 0.0)

    def test_quadratic_model_is_exact(self) -> None:
        # Arrange
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        problem = RicoProblem(Euclidean(2), quadratic_oracle(a, np.array([1.0, -1.0])))
        w = PrimalDualPair(x=np.array([0.3, 0.2]), lam=np.zeros(0))

        # Act
        ared, pred = reductions(problem, w, 0.1, np.array([-0.4, 0.7]))

        # Assert
        assert ared == pytest.approx(pred, rel=1e-12)

    @pytest.mark.parametrize(
        ("lam", "min_slope"), [(0.5, 1.9), (None, 2.75)], ids=["off-path", "central"]
    )
    def test_model_error_decays_under_step_halving(
        self, lam: float | None, min_slope: float
    ) -> None:
        # Arrange
        sphere = Sphere(4)
        rng = np.random.default_rng(4)
        b = rng.standard_normal((4, 4))
        problem = RicoProblem(
            sphere,
            quadratic_oracle(b + b.T, rng.standard_normal(4)),
            [quadratic_oracle(np.zeros((4, 4)), np.eye(4)[0], c=2.0)],
        )
        x = sphere.sample_point(5)
        mu = 0.1
        if lam is None:
            lam = mu / problem.constraint_values(x)[0]
        w = PrimalDualPair(x=x, lam=np.array([lam]))
        v = sphere.sample_tangent(x, 6)
        v = v / sphere.norm(x, v)
        steps = 1e-2 * 0.5 ** np.arange(7)

        # Act
        gaps = []
        for t in steps:
            ared, pred = reductions(problem, w, mu, t * v)
            gaps.append(abs(pred - ared))
        slope = taylor_slope(np.array(gaps), steps, floor=1e-13, window=4)

        # Assert
        assert slope >= min_slope


class TestInnerSolve:
    """Inner iteration on small problems."""

    def test_converges_to_central_point(self) -> None:
        # Arrange
        problem, w0 = build_analytic_1d()

        # Act
        result = inner_solve(
            problem, w0, 0.5, 1.0, StoppingConditions(), InnerConfig()
        )

        # Assert
        assert result.status is InnerStatus.CONVERGED
        np.testing.assert_allclose(result.w.x, [1.5], atol=0.5e-3)
        np.testing.assert_allclose(result.w.lam, [1.0], atol=0.5e-3)
        assert result.records[-1].event is InnerEvent.CONVERGED

    @pytest.mark.parametrize("subsolver", list(Subsolver))
    def test_every_subsolver_converges(self, subsolver: Subsolver) -> None:
        problem, w0 = build_analytic_1d()
        cfg = InnerConfig(subsolver=subsolver)

        result = inner_solve(problem, w0, 0.5, 0.125, StoppingConditions(), cfg)

        assert result.status is InnerStatus.CONVERGED

    def test_infeasible_retraction_shrinks_radius(self) -> None:
        # Arrange
        problem = identity_constraint_problem()
        w0 = PrimalDualPair(x=np.array([0.1]), lam=np.array([1e-3]))
        cfg = InnerConfig(max_inner_iters=2)

        # Act
        result = inner_solve(problem, w0, 0.01, 10.0, StoppingConditions(), cfg)

        # Assert
        first, second = result.records
        assert first.event is InnerEvent.SHRINK
        assert not first.feasible_retraction
        assert not first.accepted
        assert first.ared is None
        assert second.delta == pytest.approx(cfg.contract_coeff * first.d_norm)
        assert second.delta == pytest.approx(2.5)
        np.testing.assert_array_equal(result.w.x, w0.x)

    def test_accepted_iterates_stay_strictly_feasible(self) -> None:
        # Arrange
        problem = identity_constraint_problem()
        w0 = PrimalDualPair(x=np.array([3.0]), lam=np.array([0.2]))

        # Act
        result = inner_solve(
            problem, w0, 0.05, 5.0, StoppingConditions(), InnerConfig()
        )

        # Assert
        merits = [r.merit for r in result.records if r.event is InnerEvent.ACCEPTED]
        assert all(
            b <= a + ratio_regularization(a)
            for a, b in zip(merits, merits[1:], strict=False)
        )
        for record in result.records:
            assert record.min_constraint > 0.0
            assert record.min_dual > 0.0
            if record.accepted:
                assert record.feasible_retraction
                assert record.ared > 0.1 * record.pred
            if record.clip_margin is not None:
                assert record.clip_margin >= 0.0

    def test_infeasible_start_raises(self) -> None:
        problem, _ = build_analytic_1d()
        w = PrimalDualPair(x=np.array([0.5]), lam=np.array([1.0]))

        with pytest.raises(InvalidStateError, match="strictly feasible"):
            inner_solve(problem, w, 0.1, 1.0, StoppingConditions(), InnerConfig())

    def test_radius_outside_range_raises(self) -> None:
        problem, w0 = build_analytic_1d()

        with pytest.raises(InvalidInputError, match="Initial radius"):
            inner_solve(problem, w0, 0.1, 20.0, StoppingConditions(), InnerConfig())

    def test_large_merit_offset_does_not_reject_good_steps(self) -> None:
        # Arrange
        problem = RicoProblem(
            Euclidean(1), quadratic_oracle(np.eye(1), np.zeros(1), c=4e7)
        )
        w0 = PrimalDualPair(x=np.array([1e-4]), lam=np.zeros(0))
        cfg = InnerConfig(subsolver=Subsolver.EXACT, max_inner_iters=3)

        # Act
        result = inner_solve(problem, w0, 1e-12, 1e-6, StoppingConditions(), cfg)

        # Assert
        assert [r.event for r in result.records] == [InnerEvent.ACCEPTED] * 3
        assert [r.delta for r in result.records] == [1e-6, 2e-6, 4e-6]
        assert result.w.x[0] == pytest.approx(1e-4 - 7e-6)

    @patch("riptrm.solver.inner.MIN_RADIUS", 0.5)
    def test_radius_below_floor_is_a_status(self) -> None:
        # Arrange
        misleading = FunctionOracle(
            value=lambda x: float(x[0]),
            egrad=lambda x: -np.ones(1),
            ehess=lambda x, v: np.zeros(1),
        )
        problem = RicoProblem(Euclidean(1), misleading)
        w0 = PrimalDualPair(x=np.zeros(1), lam=np.zeros(0))

        # Act
        result = inner_solve(
            problem, w0, 0.1, 1.0, StoppingConditions(), InnerConfig()
        )

        # Assert
        assert result.status is InnerStatus.RADIUS_COLLAPSE
        assert [r.event for r in result.records] == [InnerEvent.REJECTED]
        assert result.delta == 1.0
        np.testing.assert_array_equal(result.w.x, w0.x)

    def test_zero_step_at_nonzero_gradient_raises(self) -> None:
        problem, w0 = build_analytic_1d()
        zero = TrsSolution(d=np.zeros(1), status=TrsStatus.INTERIOR, model_decrease=0.0)

        with (
            patch("riptrm.solver.inner.solve_subproblem", return_value=zero),
            pytest.raises(SolverFailureError, match="zero step"),
        ):
            inner_solve(problem, w0, 0.1, 1.0, StoppingConditions(), InnerConfig())


class TestRatioRegularization:
    """Shift applied to both reductions in the ratio test."""

    def test_unit_floor_for_small_merits(self) -> None:
        assert ratio_regularization(0.5) == ratio_regularization(-1.0)
        assert ratio_regularization(0.5) == pytest.approx(1e3 * np.spacing(1.0))

    def test_scales_with_merit_magnitude(self) -> None:
        assert ratio_regularization(-4e7) == pytest.approx(4e10 * np.spacing(1.0))
