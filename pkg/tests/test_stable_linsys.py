"""Tests for the stable linear system identification problem."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from riptrm.bench.feasibility import find_interior_point
from riptrm.bench.stable_linsys import (
    StableLinSysSpec,
    build_stable_linsys,
    system_matrix,
)
from riptrm.bench.trace import records_from_trace
from riptrm.bench.verify import VerifySettings, verify_run
from riptrm.errors import InvalidInputError
from riptrm.problem.models import PrimalDualPair
from riptrm.solver.inner import ratio_regularization
from riptrm.solver.models import InnerConfig, OuterConfig, OuterStatus, VirtualClock
from riptrm.solver.outer import outer_solve
from riptrm.trs.models import Subsolver

if TYPE_CHECKING:
    from riptrm.bench.stable_linsys import StableLinSysData
    from riptrm.problem.rico import RicoProblem
    from riptrm.solver.models import OuterResult


class TestStableLinSysSpec:
    """Parameter validation."""

    @pytest.mark.parametrize(
        ("overrides", "match"),
        [
            ({"n": 1}, "State dimension"),
            ({"n_obs": 1}, "observations"),
            ({"h": 0.0}, "Sampling interval"),
            ({"frac1": 0.8, "frac2": 0.3}, "fractions"),
            ({"noise_sigma": -1.0}, "noise_sigma"),
        ],
    )
    def test_invalid_values_raise(self, overrides: dict, match: str) -> None:
        with pytest.raises(InvalidInputError, match=match):
            StableLinSysSpec(**overrides)


class TestBuildStableLinSys:
    """Data generation and problem construction."""

    def test_constraint_layout(self) -> None:
        # Act
        data = build_stable_linsys()

        # Assert
        assert len(data.box_indices) == 7
        assert len(data.ring_indices) == 2
        assert set(data.ring_indices) <= set(data.box_indices)
        assert data.problem.m == 2 * 7 + 2
        assert data.states.shape == (5, 21)

    def test_product_manifold(self) -> None:
        data = build_stable_linsys()

        names = [f.name for f in data.problem.manifold.factors]

        assert names == [
            "SkewSymmetric(5)",
            "SymmetricPositiveDefinite(5)",
            "SymmetricPositiveDefinite(5)",
        ]

    def test_same_seed_gives_same_instance(self) -> None:
        first = build_stable_linsys(StableLinSysSpec(seed=7))
        second = build_stable_linsys(StableLinSysSpec(seed=7))

        np.testing.assert_array_equal(first.states, second.states)
        assert first.box_indices == second.box_indices
        assert first.ring_centres == second.ring_centres

    def test_different_seeds_differ(self) -> None:
        first = build_stable_linsys(StableLinSysSpec(seed=1))
        second = build_stable_linsys(StableLinSysSpec(seed=2))

        assert not np.array_equal(first.states, second.states)

    def test_truth_is_strictly_feasible(self) -> None:
        # Arrange
        data = build_stable_linsys()

        # Act
        values = data.problem.constraint_values(data.truth)

        # Assert
        data.problem.manifold.check_point(data.truth)
        assert values.min() == pytest.approx(3 * 0.05**2, rel=1e-6)
        assert values[: 2 * 7].min() == pytest.approx(0.1, rel=1e-9)

    def test_truth_is_stable(self) -> None:
        data = build_stable_linsys()

        eigenvalues = np.linalg.eigvals(system_matrix(data.truth))

        assert np.all(eigenvalues.real < 0.0)

    def test_noise_free_data_fits_the_truth(self) -> None:
        data = build_stable_linsys(StableLinSysSpec(noise_sigma=0.0))

        scale = float(np.linalg.norm(data.states))

        assert data.problem.objective_value(data.truth) <= 1e-12 * scale

    def test_noisy_data_has_positive_error(self) -> None:
        data = build_stable_linsys()

        assert data.problem.objective_value(data.truth) > 0.0

    def test_no_index_sets_leaves_the_problem_unconstrained(self) -> None:
        data = build_stable_linsys(StableLinSysSpec(frac1=0.0, frac2=0.0))

        assert data.problem.m == 0
        assert data.lower == -np.inf


def _feasible_start(data: StableLinSysData, seed: int = 0) -> PrimalDualPair:
    x0 = find_interior_point(data.problem, seed=seed)
    return PrimalDualPair(x=x0, lam=np.ones(data.problem.m))


def _audit(problem: RicoProblem, result: OuterResult, cfg: OuterConfig) -> list[str]:
    settings = VerifySettings(
        eta=cfg.inner.eta,
        contract_coeff=cfg.inner.contract_coeff,
        delta_max=cfg.inner.delta_max,
        active_tol=cfg.active_tol,
    )
    records = records_from_trace(result.trace)
    return verify_run(records, problem, result.w, settings).violations


class TestSolveStableLinSys:
    """Interior-point runs from the feasibility-phase start."""

    def test_short_run_keeps_iterates_feasible_and_merit_monotone(self) -> None:
        # Arrange
        data = build_stable_linsys()
        w0 = _feasible_start(data)
        cfg = OuterConfig(max_outer=2)

        # Act
        result = outer_solve(data.problem, w0, cfg, clock=VirtualClock())

        # Assert
        assert _audit(data.problem, result, cfg) == []
        previous: dict[int, float] = {}
        for record in result.trace.inner_records:
            assert record.min_constraint > 0.0
            assert record.min_dual > 0.0
            if record.accepted:
                last = previous.get(record.outer_iter)
                if last is not None:
                    assert record.merit <= last + ratio_regularization(last)
                previous[record.outer_iter] = record.merit
        assert data.problem.strict_feasible(result.w.x)

    @pytest.mark.slow
    def test_tcg_reduces_the_residual_within_the_budget(self) -> None:
        # Arrange
        data = build_stable_linsys()
        w0 = _feasible_start(data)
        cfg = OuterConfig(
            inner=InnerConfig(subsolver=Subsolver.TCG),
            budget_s=240.0,
            target_residual=1e-6,
        )

        # Act
        result = outer_solve(data.problem, w0, cfg)

        # Assert
        assert result.status is OuterStatus.TARGET_RESIDUAL
        assert result.residual.total <= 1e-6
        assert all(r.min_constraint > 0.0 for r in result.trace.inner_records)
        assert _audit(data.problem, result, cfg) == []
