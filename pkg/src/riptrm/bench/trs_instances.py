"""Random trust-region subproblems and the checks run on every subsolver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from riptrm.errors import SolverFailureError
from riptrm.linalg.dense import qr_thin, symmetrize
from riptrm.manifolds.euclidean import Euclidean
from riptrm.trs.models import Subsolver, TrsInstance
from riptrm.trs.solvers import (
    min_eig,
    model_value,
    operator_norm,
    solve_subproblem,
    verify_global_optimality,
)

logger = logging.getLogger(__name__)

MAX_DIM = 10
HARD_CASE_FRACTION = 0.1
VERIFY_TOL = 1e-8
BOUND_SLACK = 1e-12
EIGEN_EPS = 1e-8
GRID_TOL = 1e-6
GRID_POINTS = 2001


@dataclass(frozen=True, eq=False)
class TrsCase:
    """A subproblem ``min 1/2 d^T H d + g^T d`` over ``|d| <= radius``."""

    matrix: np.ndarray
    grad: np.ndarray
    radius: float
    hard: bool = False

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    def instance(self) -> TrsInstance:
        manifold = Euclidean(self.dim)
        matrix = self.matrix
        return TrsInstance(
            manifold=manifold,
            x=np.zeros(self.dim),
            apply_H=lambda v: matrix @ v,
            grad=self.grad,
            radius=self.radius,
        )


def random_case(
    rng: np.random.Generator, dim: int | None = None, *, hard: bool = False
) -> TrsCase:
    """Draw a subproblem with distinct random eigenvalues.

    A hard case has a negative leading eigenvalue, a gradient orthogonal to
    its eigenvector and a radius larger than the step built from the other
    eigen-directions, so the minimiser needs a leading-eigenvector component.
    """
    if dim is None:
        dim = int(rng.integers(1, MAX_DIM + 1))
    q = qr_thin(rng.standard_normal((dim, dim))).q
    if hard:
        lead = -0.1 - abs(float(rng.standard_normal()))
        rest = lead + 0.5 + np.sort(rng.uniform(0.0, 3.0, dim - 1))
        eigenvalues = np.concatenate([[lead], rest])
        coords = np.concatenate([[0.0], rng.standard_normal(dim - 1)])
        partial = float(np.linalg.norm(coords[1:] / (rest - lead))) if dim > 1 else 0.0
        radius = 1.5 * partial if partial > 0.0 else float(rng.uniform(0.1, 2.0))
    else:
        eigenvalues = np.sort(rng.standard_normal(dim))
        coords = rng.standard_normal(dim)
        radius = float(rng.uniform(0.1, 2.0))
    matrix = symmetrize((q * eigenvalues) @ q.T)
    return TrsCase(matrix=matrix, grad=q @ coords, radius=radius, hard=hard)


def polar_grid_minimum(case: TrsCase, points: int = GRID_POINTS) -> float:
    """Smallest model value on a polar grid over a two-dimensional trust region."""
    r = np.linspace(0.0, case.radius, points)
    theta = np.linspace(0.0, 2.0 * math.pi, points)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    d1, d2 = rr * np.cos(tt), rr * np.sin(tt)
    h, g = case.matrix, case.grad
    values = (
        0.5 * (h[0, 0] * d1**2 + 2.0 * h[0, 1] * d1 * d2 + h[1, 1] * d2**2)
        + g[0] * d1
        + g[1] * d2
    )
    return float(values.min())


def cauchy_bound(inst: TrsInstance) -> float:
    """``1/2 |g| min(radius, |g| / |H|)``, guaranteed by every subsolver."""
    g_norm = inst.norm(inst.grad)
    h_norm = operator_norm(inst)
    reach = inst.radius if h_norm == 0.0 else min(inst.radius, g_norm / h_norm)
    return 0.5 * g_norm * reach


@dataclass
class TrsBenchReport:
    count: int = 0
    hard_cases: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_case(
    case: TrsCase, index: int, report: TrsBenchReport, grid_points: int = GRID_POINTS
) -> None:
    """Run every subsolver on ``case`` and record violated guarantees."""
    inst = case.instance()
    decreases = {}
    for subsolver in Subsolver:
        try:
            solution = solve_subproblem(inst, subsolver)
        except SolverFailureError as e:
            report.failures.append(f"case {index}: {subsolver} failed: {e}")
            continue
        decrease = -model_value(inst, solution.d)
        decreases[subsolver] = decrease
        bound = cauchy_bound(inst)
        if decrease < bound - BOUND_SLACK * (1.0 + bound):
            report.failures.append(
                f"case {index}: {subsolver} decrease {decrease!r} below the "
                f"Cauchy bound {bound!r}"
            )
        if subsolver is not Subsolver.EXACT:
            continue
        verdict = verify_global_optimality(inst, solution.d, solution.nu, VERIFY_TOL)
        if not verdict.passed:
            report.failures.append(f"case {index}: exact step not optimal: {verdict}")
        lam_min = min_eig(inst)
        if lam_min < -EIGEN_EPS:
            eigen = 0.5 * abs(lam_min) * inst.radius**2
            if decrease < eigen - BOUND_SLACK * (1.0 + eigen):
                report.failures.append(
                    f"case {index}: exact decrease {decrease!r} below the "
                    f"eigen bound {eigen!r}"
                )
        if case.dim == 2 and grid_points:
            grid = polar_grid_minimum(case, grid_points)
            if -decrease > grid + GRID_TOL:
                report.failures.append(
                    f"case {index}: exact model value {-decrease!r} above the "
                    f"grid minimum {grid!r}"
                )
    exact = decreases.get(Subsolver.EXACT)
    if exact is None:
        return
    for subsolver, decrease in decreases.items():
        if decrease > exact + BOUND_SLACK * (1.0 + abs(exact)):
            report.failures.append(
                f"case {index}: {subsolver} decrease {decrease!r} beats the "
                f"exact step {exact!r}"
            )


def run_trs_bench(
    count: int, seed: int = 0, *, grid_points: int = GRID_POINTS
) -> TrsBenchReport:
    """Check ``count`` random instances, a tenth of them constructed hard cases.

    ``grid_points = 0`` skips the polar-grid comparison on two-dimensional
    instances.
    """
    rng = np.random.default_rng(seed)
    report = TrsBenchReport()
    hard_every = round(1 / HARD_CASE_FRACTION)
    for index in range(count):
        hard = index % hard_every == 0
        case = random_case(rng, hard=hard)
        report.count += 1
        report.hard_cases += int(hard)
        check_case(case, index, report, grid_points)
    logger.info(
        "TRS bench: %d instances (%d hard), %d failures",
        report.count,
        report.hard_cases,
        len(report.failures),
    )
    return report
