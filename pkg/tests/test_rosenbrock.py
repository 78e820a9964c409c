"""Tests for the Rosenbrock problem on the Grassmann manifold."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from riptrm.bench.rosenbrock import (
    RosenbrockGrassmannSpec,
    build_rosenbrock_grassmann,
    rosenbrock_oracle,
)
from riptrm.bench.trace import records_from_trace
from riptrm.bench.verify import VerifySettings, verify_run
from riptrm.errors import InvalidInputError
from riptrm.solver.inner import ratio_regularization
from riptrm.solver.models import (
    InnerConfig,
    OuterConfig,
    OuterStatus,
    VirtualClock,
)
from riptrm.solver.outer import outer_solve
from riptrm.trs.models import Subsolver

if TYPE_CHECKING:
    from riptrm.problem.rico import RicoProblem
    from riptrm.solver.models import OuterResult


class TestRosenbrockOracle:
    """The vectorised Rosenbrock function."""

    def test_minimum_at_ones(self) -> None:
        oracle = rosenbrock_oracle(100.0)

        assert oracle.value(np.ones((3, 2))) == 0.0
        np.testing.assert_allclose(oracle.egrad(np.ones((3, 2))), np.zeros((3, 2)))

    def test_gradient_keeps_the_matrix_shape(self) -> None:
        oracle = rosenbrock_oracle(1.0)

        assert oracle.egrad(np.zeros((5, 3))).shape == (5, 3)

    def test_hand_evaluation(self) -> None:
        # (v1 - v0)^2 = 4 and (1 - v0)^2 = 1
        oracle = rosenbrock_oracle(2.0)

        assert oracle.value(np.array([[0.0], [2.0]])) == pytest.approx(9.0)


class TestBuildRosenbrockGrassmann:
    """Problem construction and the initial point."""

    def test_default_problem(self) -> None:
        # Act
        problem, w0 = build_rosenbrock_grassmann()

        # Assert
        assert problem.m == 15
        assert problem.manifold.dim == 6
        assert w0.x.shape == (5, 3)
        np.testing.assert_array_equal(w0.lam, np.ones(15))

    def test_objective_at_start(self) -> None:
        problem, w0 = build_rosenbrock_grassmann()

        assert problem.objective_value(w0.x) == pytest.approx(50000011.0)

    def test_start_is_strictly_feasible(self) -> None:
        # Arrange
        problem, w0 = build_rosenbrock_grassmann()

        # Act
        values = problem.constraint_values(w0.x)

        # Assert
        assert problem.strict_feasible(w0.x)
        assert set(np.round(values, 12)) == {0.01, 1.01}
        assert int(np.sum(np.isclose(values, 1.01))) == 3

    def test_constraint_names(self) -> None:
        problem, _ = build_rosenbrock_grassmann()

        assert problem.constraints[0].name == "X[0,0] - c"
        assert problem.constraints[-1].name == "X[4,2] - c"

    @pytest.mark.parametrize(
        ("n", "k", "alpha"), [(3, 3, 1.0), (4, 0, 1.0), (5, 3, 0.0)]
    )
    def test_invalid_spec_raises(self, n: int, k: int, alpha: float) -> None:
        with pytest.raises(InvalidInputError):
            RosenbrockGrassmannSpec(n=n, k=k, alpha=alpha)


def _audit(problem: RicoProblem, result: OuterResult, cfg: OuterConfig) -> list[str]:
    settings = VerifySettings(
        eta=cfg.inner.eta,
        contract_coeff=cfg.inner.contract_coeff,
        delta_max=cfg.inner.delta_max,
        active_tol=cfg.active_tol,
    )
    records = records_from_trace(result.trace)
    return verify_run(records, problem, result.w, settings).violations


class TestSolveRosenbrockGrassmann:
    """Interior-point runs on the default instance."""

    @pytest.mark.parametrize("subsolver", list(Subsolver))
    def test_short_run_keeps_the_trace_invariants(self, subsolver: Subsolver) -> None:
        # Arrange
        problem, w0 = build_rosenbrock_grassmann()
        cfg = OuterConfig(inner=InnerConfig(subsolver=subsolver), max_outer=3)

        # Act
        result = outer_solve(problem, w0, cfg, clock=VirtualClock())

        # Assert
        assert result.outer_iters == 3
        assert _audit(problem, result, cfg) == []
        merits = [
            r.merit
            for r in result.trace.inner_records
            if r.outer_iter == 1 and r.accepted
        ]
        assert all(
            b <= a + ratio_regularization(a)
            for a, b in zip(merits, merits[1:], strict=False)
        )
        assert all(r.min_constraint > 0.0 for r in result.trace.inner_records)

    @pytest.mark.slow
    def test_exact_subsolver_reaches_second_order_point(self) -> None:
        # Arrange
        problem, w0 = build_rosenbrock_grassmann()
        cfg = OuterConfig(
            inner=InnerConfig(subsolver=Subsolver.EXACT),
            budget_s=240.0,
            target_residual=1e-6,
        )

        # Act
        result = outer_solve(problem, w0, cfg)

        # Assert
        start, *_, final = result.trace.outer_summaries
        assert result.status is OuterStatus.TARGET_RESIDUAL
        assert result.residual.total <= 1e-6
        assert final.second_order_measure >= -1e-3 * abs(start.second_order_measure)
        assert _audit(problem, result, cfg) == []
