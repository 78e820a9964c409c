"""Outer barrier loop: drive ``mu`` to zero through successive inner solves."""

from __future__ import annotations

import logging
import time
from typing import TYPE_CHECKING

import numpy as np

from riptrm.errors import InvalidInputError
from riptrm.linalg.dense import min_eigenvalue
from riptrm.problem.models import check_multiplier_count
from riptrm.solver.inner import inner_solve
from riptrm.solver.models import OuterResult, OuterStatus, OuterSummary, SolverTrace

if TYPE_CHECKING:
    from collections.abc import Callable

    from riptrm.problem.models import PrimalDualPair
    from riptrm.problem.rico import RicoProblem
    from riptrm.solver.models import OuterConfig

logger = logging.getLogger(__name__)


def initial_radius(problem: RicoProblem, cfg: OuterConfig) -> float:
    """``delta_hat0`` if configured, else an eighth of the manifold scale."""
    radius = cfg.delta_hat0
    if radius is None:
        radius = problem.manifold.scale / 8
    return min(radius, cfg.inner.delta_max)


def summarize(
    problem: RicoProblem,
    w: PrimalDualPair,
    *,
    outer_iter: int,
    mu: float,
    delta_hat: float,
    inner_iters: int,
    status: str,
    elapsed_s: float,
    active_tol: float,
) -> OuterSummary:
    """Residual and curvature information at a strictly feasible iterate."""
    manifold = problem.manifold
    basis = manifold.tangent_basis(w.x)
    condensed = manifold.operator_matrix(w.x, basis, problem.condensed_operator(w))
    return OuterSummary(
        outer_iter=outer_iter,
        mu=mu,
        delta_hat=delta_hat,
        f=problem.objective_value(w.x),
        merit=problem.merit(w.x, mu),
        residual=problem.kkt_residual(w),
        min_eig_H=min_eigenvalue(condensed),
        second_order_measure=problem.second_order_measure(w, active_tol),
        inner_iters=inner_iters,
        status=status,
        elapsed_s=elapsed_s,
    )


def outer_solve(
    problem: RicoProblem,
    w0: PrimalDualPair,
    cfg: OuterConfig,
    *,
    clock: Callable[[], float] | None = None,
) -> OuterResult:
    """Run the interior-point trust-region method from ``w0``.

    Parameters
    ----------
    problem:
        The constrained problem.
    w0:
        Strictly feasible start with positive multipliers.
    cfg:
        Barrier schedule, stopping conditions, budgets and inner parameters.
    clock:
        Time source, :func:`time.perf_counter` by default. Pass a
        :class:`~riptrm.solver.models.VirtualClock` for reproducible traces.

    Returns
    -------
    OuterResult
        The final primal-dual pair, the reason the loop stopped and the full
        trace (one row per inner iteration plus one summary per outer
        iteration, including the start point).

    Raises
    ------
    InvalidInputError
        If ``w0`` is not strictly feasible or has a nonpositive multiplier.
    """
    check_multiplier_count(w0, problem.m)
    if not problem.strict_feasible(w0.x):
        msg = "The initial point is not strictly feasible"
        raise InvalidInputError(msg)
    if np.any(w0.lam <= 0.0):
        msg = "The initial multipliers must be positive"
        raise InvalidInputError(msg)
    problem.manifold.check_point(w0.x)

    clock = clock or time.perf_counter
    start = clock()
    deadline = start + cfg.budget_s if cfg.budget_s is not None else None
    mu = cfg.mu0
    delta_hat = initial_radius(problem, cfg)
    w = w0
    trace = SolverTrace()
    summary = summarize(
        problem,
        w,
        outer_iter=0,
        mu=mu,
        delta_hat=delta_hat,
        inner_iters=0,
        status="initial",
        elapsed_s=clock() - start,
        active_tol=cfg.active_tol,
    )
    trace.append(summary)
    logger.info(
        "Start: residual %.3e, second-order measure %.3e, delta %.3e",
        summary.residual.total,
        summary.second_order_measure,
        delta_hat,
    )

    k = 0
    while True:
        target = cfg.target_residual
        if target is not None and summary.residual.total <= target:
            status = OuterStatus.TARGET_RESIDUAL
            break
        if deadline is not None and clock() >= deadline:
            status = OuterStatus.TIME_BUDGET
            break
        if cfg.max_outer is not None and k >= cfg.max_outer:
            status = OuterStatus.MAX_OUTER
            break
        if mu < cfg.mu_min:
            status = OuterStatus.MU_UNDERFLOW
            break
        k += 1
        result = inner_solve(
            problem,
            w,
            mu,
            delta_hat,
            cfg.stopping,
            cfg.inner,
            outer_iter=k,
            clock=clock,
            start_time=start,
            deadline=deadline,
        )
        trace.extend(result.records)
        w = result.w
        delta_hat = max(result.delta, cfg.delta_bar)
        summary = summarize(
            problem,
            w,
            outer_iter=k,
            mu=mu,
            delta_hat=delta_hat,
            inner_iters=len(result.records),
            status=result.status,
            elapsed_s=clock() - start,
            active_tol=cfg.active_tol,
        )
        trace.append(summary)
        logger.info(
            "Outer %d: mu %.3e, residual %.3e, %d inner (%s), delta %.3e",
            k,
            mu,
            summary.residual.total,
            len(result.records),
            result.status,
            delta_hat,
        )
        mu = cfg.next_mu(mu)

    logger.info("Stopped after %d outer iterations: %s", k, status)
    return OuterResult(
        w=w, status=status, trace=trace, outer_iters=k, residual=summary.residual
    )
