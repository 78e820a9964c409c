"""Tests for the finite-difference oracle checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from riptrm.bench.analytic import build_analytic_1d
from riptrm.bench.rosenbrock import build_rosenbrock_grassmann
from riptrm.bench.stable_linsys import StableLinSysSpec, build_stable_linsys
from riptrm.manifolds.euclidean import Euclidean
from riptrm.manifolds.product import ProductArray
from riptrm.manifolds.sphere import Sphere
from riptrm.problem.gradcheck import (
    GradcheckReport,
    ambient_norm,
    check_oracle,
    check_problem,
    taylor_slope,
)
from riptrm.problem.models import FunctionOracle


def quadratic(a: np.ndarray, *, wrong_gradient: bool = False) -> FunctionOracle:
    """``x -> 1/2 x^T A x`` with an optionally broken gradient."""
    factor = 1.1 if wrong_gradient else 1.0
    return FunctionOracle(
        value=lambda x: 0.5 * float(x @ a @ x),
        egrad=lambda x: factor * (a @ x),
        ehess=lambda x, v: a @ v,
        name="quadratic",
    )


class TestTaylorSlope:
    """Log-log slope of Taylor remainders."""

    def test_recovers_power_law(self) -> None:
        steps = 1e-2 * 0.5 ** np.arange(6)

        slope = taylor_slope(3.0 * steps**3, steps, floor=0.0)

        assert slope == pytest.approx(3.0)

    def test_window_fits_the_smallest_steps(self) -> None:
        # Arrange
        steps = 1e-2 * 0.5 ** np.arange(9)
        errors = steps**3 - 80.0 * steps**4

        # Act
        full = taylor_slope(errors, steps, floor=0.0)
        tail = taylor_slope(errors, steps, floor=0.0, window=4)

        # Assert
        assert full < 2.9
        assert tail == pytest.approx(3.0, abs=0.02)

    def test_window_skips_steps_at_the_floor(self) -> None:
        steps = 1e-2 * 0.5 ** np.arange(9)
        errors = np.where(steps > 1e-4, steps**2, 1e-20)

        slope = taylor_slope(errors, steps, floor=1e-12, window=3)

        assert slope == pytest.approx(2.0)

    def test_exact_expansion_is_infinite(self) -> None:
        steps = 1e-2 * 0.5 ** np.arange(6)

        assert taylor_slope(np.zeros(6), steps, floor=1e-14) == math.inf


class TestCheckOracle:
    """Derivative checks of single oracles."""

    def test_quadratic_on_sphere_passes(self) -> None:
        # Arrange
        rng = np.random.default_rng(0)
        b = rng.standard_normal((4, 4))
        sphere = Sphere(4)

        # Act
        report = check_oracle(sphere, quadratic(b + b.T), sphere.sample_point(1), 2)

        # Assert
        assert report.passed, report

    def test_wrong_gradient_fails(self) -> None:
        # Arrange
        a = np.diag([1.0, 2.0, 3.0])
        x = np.array([1.0, -1.0, 0.5])

        # Act
        report = check_oracle(Euclidean(3), quadratic(a, wrong_gradient=True), x, 0)

        # Assert
        assert not report.passed
        assert report.ehess_rel_err == pytest.approx(0.1)

    def test_is_deterministic_under_seed(self) -> None:
        a = np.diag([1.0, 2.0, 3.0])
        x = np.array([1.0, -1.0, 0.5])

        first = check_oracle(Euclidean(3), quadratic(a), x, 5)
        second = check_oracle(Euclidean(3), quadratic(a), x, 5)

        assert first == second

    def test_report_thresholds(self) -> None:
        report = GradcheckReport(
            name="f",
            egrad_rel_err=0.0,
            ehess_rel_err=0.0,
            rgrad_rel_err=0.0,
            grad_slope=2.0,
            hess_slope=2.5,
        )

        assert not report.passed


class TestCheckProblem:
    """Every built-in problem has consistent derivatives."""

    def test_analytic_problem(self) -> None:
        problem, w0 = build_analytic_1d()

        reports = check_problem(problem, w0.x, seed=0)

        assert len(reports) == 2
        assert all(r.passed for r in reports)

    def test_rosenbrock_grassmann(self) -> None:
        # Arrange
        problem, w0 = build_rosenbrock_grassmann()

        # Act
        reports = check_problem(problem, w0.x, seed=0)

        # Assert
        assert len(reports) == 1 + 15
        failed = [r for r in reports if not r.passed]
        assert not failed, failed

    def test_stable_linsys(self) -> None:
        # Arrange
        data = build_stable_linsys(StableLinSysSpec(noise_sigma=0.05))

        # Act
        reports = check_problem(data.problem, data.truth, seed=0)

        # Assert
        assert len(reports) == 1 + data.problem.m
        failed = [r for r in reports if not r.passed]
        assert not failed, failed


def test_ambient_norm_of_product_array() -> None:
    a = ProductArray([np.array([3.0]), np.array([[4.0]])])

    assert ambient_norm(a) == pytest.approx(5.0)
