"""Tests for the random trust-region subproblem benchmark."""

from __future__ import annotations

import numpy as np
import pytest

from riptrm.bench.trs_instances import (
    TrsCase,
    cauchy_bound,
    polar_grid_minimum,
    random_case,
    run_trs_bench,
)
from riptrm.trs.solvers import exact_step


class TestRandomCase:
    """Instance generation."""

    def test_dimension_and_symmetry(self) -> None:
        case = random_case(np.random.default_rng(0), 4)

        assert case.matrix.shape == (4, 4)
        np.testing.assert_array_equal(case.matrix, case.matrix.T)
        assert 0.1 <= case.radius <= 2.0

    def test_hard_case_structure(self) -> None:
        # Arrange
        case = random_case(np.random.default_rng(3), 5, hard=True)
        eigenvalues, vectors = np.linalg.eigh(case.matrix)

        # Act
        solution = exact_step(case.instance())

        # Assert
        assert eigenvalues[0] < 0.0
        assert abs(vectors[:, 0] @ case.grad) < 1e-10
        assert solution.nu == pytest.approx(-eigenvalues[0], abs=1e-8)
        assert np.linalg.norm(solution.d) == pytest.approx(case.radius, rel=1e-8)


class TestBounds:
    """Reference values used by the benchmark."""

    def test_cauchy_bound(self) -> None:
        case = TrsCase(
            matrix=np.diag([2.0, 1.0]), grad=np.array([4.0, 0.0]), radius=1.0
        )

        # |g| = 4, |H| = 2, min(1, 2) = 1
        assert cauchy_bound(case.instance()) == pytest.approx(2.0)

    def test_polar_grid_minimum_is_an_upper_bound(self) -> None:
        case = random_case(np.random.default_rng(1), 2)
        inst = case.instance()
        d = exact_step(inst).d

        optimum = 0.5 * d @ case.matrix @ d + case.grad @ d

        assert optimum <= polar_grid_minimum(case, 201) + 1e-12


class TestRunTrsBench:
    """End-to-end benchmark runs."""

    def test_small_run_has_no_failures(self) -> None:
        # Act
        report = run_trs_bench(50, seed=2, grid_points=201)

        # Assert
        assert report.ok, report.failures
        assert report.count == 50
        assert report.hard_cases == 5

    @pytest.mark.slow
    def test_full_run_has_no_failures(self) -> None:
        # Act
        report = run_trs_bench(1000, seed=0)

        # Assert
        assert report.ok, report.failures
        assert report.count == 1000
        assert report.hard_cases == 100
