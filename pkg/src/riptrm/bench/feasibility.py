"""Feasibility phase: find a strictly interior point before the solver starts."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from riptrm.errors import FeasibilityFailureError, ManifoldConsistencyError
from riptrm.manifolds.base import as_generator

if TYPE_CHECKING:
    from riptrm.manifolds.base import Point, Seed, Tangent
    from riptrm.problem.rico import RicoProblem

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-3
ARMIJO_C = 1e-4
MIN_STEP = 1e-12


def _violation(
    problem: RicoProblem, x: Point, target: float
) -> tuple[float, np.ndarray]:
    gap = np.maximum(0.0, target - problem.constraint_values(x))
    return float(np.sum(gap**2)), gap


def _violation_rgrad(problem: RicoProblem, x: Point, gap: np.ndarray) -> Tangent:
    egrad = None
    for gap_i, g in zip(gap, problem.constraints, strict=True):
        if gap_i > 0.0:
            term = (-2.0 * float(gap_i)) * g.egrad(x)
            egrad = term if egrad is None else egrad + term
    return problem.manifold.egrad_to_rgrad(x, egrad)


def _descend(
    problem: RicoProblem, x: Point, tol: float, max_iters: int
) -> Point | None:
    """Armijo gradient descent on the squared violation until ``min g >= tol``."""
    manifold = problem.manifold
    target = 2.0 * tol
    psi, gap = _violation(problem, x, target)
    for _ in range(max_iters):
        if problem.constraint_values(x).min() >= tol:
            return x
        grad = _violation_rgrad(problem, x, gap)
        grad_sq = manifold.inner(x, grad, grad)
        if not grad_sq > 0.0:
            return None
        step = min(1.0, manifold.scale / np.sqrt(grad_sq))
        while step > MIN_STEP:
            try:
                y = manifold.retract(x, -step * grad)
            except ManifoldConsistencyError:
                step *= 0.5
                continue
            psi_y, gap_y = _violation(problem, y, target)
            if psi_y <= psi - ARMIJO_C * step * grad_sq:
                break
            step *= 0.5
        else:
            return None
        x, psi, gap = y, psi_y, gap_y
    return None


def find_interior_point(
    problem: RicoProblem,
    seed: Seed = None,
    tol: float = FEASIBILITY_TOL,
    *,
    warm_start: Point | None = None,
    max_restarts: int = 50,
    max_iters: int = 500,
) -> Point:
    """Return a point with ``min_i g_i(x) >= tol``.

    A warm start that already qualifies is returned unchanged. Otherwise the
    squared violation ``sum_i max(0, 2 tol - g_i)**2`` is minimised by
    Riemannian gradient descent with Armijo backtracking, first from the
    warm start and then from seeded random samples.

    Raises
    ------
    FeasibilityFailureError
        If no start reaches the tolerance within ``max_restarts`` attempts.
    """
    if problem.m == 0:
        if warm_start is not None:
            return warm_start
        return problem.manifold.sample_point(seed)
    rng = as_generator(seed)
    starts = 0
    if warm_start is not None:
        if problem.constraint_values(warm_start).min() >= tol:
            return warm_start
        found = _descend(problem, warm_start, tol, max_iters)
        if found is not None:
            return found
        starts = 1
    for attempt in range(starts, max_restarts):
        x = problem.manifold.sample_point(rng)
        found = _descend(problem, x, tol, max_iters)
        if found is not None:
            logger.info("Interior point found on attempt %d", attempt + 1)
            return found
        logger.debug("Feasibility attempt %d failed", attempt + 1)
    msg = (
        f"No point with min constraint >= {tol} found for '{problem.name}' "
        f"after {max_restarts} attempts"
    )
    raise FeasibilityFailureError(msg)
