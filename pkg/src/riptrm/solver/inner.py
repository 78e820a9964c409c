"""Inner trust-region iteration at a fixed barrier parameter.

Each iteration solves the trust-region subproblem for the condensed Newton
system, forms the dual Newton step, tests the candidate against the stopping
conditions, and then applies the ratio test to the log-barrier merit. Only
strictly feasible retractions are ever accepted; infeasible ones shrink the
radius to a fraction of the step length.
"""

from __future__ import annotations

import logging
import time
from typing import TYPE_CHECKING

import numpy as np

from riptrm.errors import (
    InvalidInputError,
    InvalidStateError,
    ManifoldConsistencyError,
    NotStrictlyFeasibleError,
    SolverFailureError,
)
from riptrm.linalg.dense import min_eigenvalue
from riptrm.problem.models import PrimalDualPair
from riptrm.solver.models import (
    InnerEvent,
    InnerIterationRecord,
    InnerResult,
    InnerStatus,
    StoppingCheck,
)
from riptrm.trs.models import TrsInstance
from riptrm.trs.solvers import model_value, solve_subproblem

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from riptrm.manifolds.base import Tangent
    from riptrm.problem.rico import RicoProblem
    from riptrm.solver.models import InnerConfig, StoppingConditions

logger = logging.getLogger(__name__)

RADIUS_EQUALITY_RTOL = 1e-12
MIN_RADIUS = 1e-100
RHO_REGULARIZATION = 1e3


def reductions(
    problem: RicoProblem, w: PrimalDualPair, mu: float, d: Tangent
) -> tuple[float, float]:
    """Actual and predicted decrease of the merit function for the step ``d``.

    Raises
    ------
    NotStrictlyFeasibleError
        If ``x`` or ``R_x(d)`` is not strictly feasible.
    """
    x = w.x
    inst = TrsInstance(
        manifold=problem.manifold,
        x=x,
        apply_H=problem.condensed_operator(w),
        grad=problem.barrier_gradient(x, mu),
        radius=1.0,
    )
    x_new = problem.manifold.retract(x, d)
    ared = problem.merit(x, mu) - problem.merit(x_new, mu)
    return ared, -model_value(inst, d)


def ratio_regularization(merit: float) -> float:
    """Shift added to both ``ared`` and ``pred`` before the ratio test.

    The shift is a multiple of the rounding level of the merit, so the ratio
    tends to one once both reductions fall to that level.
    """
    return max(1.0, abs(merit)) * float(np.spacing(1.0)) * RHO_REGULARIZATION


def tr_radius_update(
    delta: float, ared: float, pred: float, d_norm: float, delta_max: float
) -> float:
    """Next trust-region radius from the ratio of actual to predicted decrease.

    A nonpositive ``pred`` is treated as an unsuccessful iteration.
    """
    if pred <= 0.0 or ared < 0.25 * pred:
        return delta / 4.0
    on_boundary = abs(d_norm - delta) <= RADIUS_EQUALITY_RTOL * delta
    if ared >= 0.75 * pred and on_boundary:
        return min(2.0 * delta, delta_max)
    return delta


def dual_newton_step(
    problem: RicoProblem,
    w: PrimalDualPair,
    mu: float,
    d: Tangent,
    constraint_rgrads: Sequence[Tangent] | None = None,
) -> np.ndarray:
    """Dual step ``-lam + mu / g - (lam / g) * <grad g, d>`` of the Newton system."""
    if problem.m == 0:
        return np.zeros(0)
    x = w.x
    g = problem.constraint_values(x)
    if np.any(g <= 0.0):
        msg = f"Dual Newton step needs a strictly feasible point, min g = {g.min()!r}"
        raise NotStrictlyFeasibleError(msg)
    if constraint_rgrads is None:
        constraint_rgrads = problem.constraint_rgrads(x)
    slopes = np.array(
        [problem.manifold.inner(x, grad_g, d) for grad_g in constraint_rgrads]
    )
    return -w.lam + mu / g - (w.lam / g) * slopes


def clip_interval(
    lambda_prev: np.ndarray, mu: float, g_new: np.ndarray, c_lo: float, c_hi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise bounds ``(zeta_min, zeta_max)`` for the clipped duals."""
    g_new = np.asarray(g_new, dtype=float)
    if np.any(g_new <= 0.0):
        msg = "Clipping needs strictly positive constraint values"
        raise NotStrictlyFeasibleError(msg)
    if not mu > 0.0:
        msg = f"Clipping needs a positive barrier parameter, got {mu}"
        raise InvalidInputError(msg)
    lambda_prev = np.asarray(lambda_prev, dtype=float)
    lower = c_lo * np.minimum(np.minimum(1.0, lambda_prev), mu / g_new)
    upper = np.maximum(
        np.maximum(c_hi, lambda_prev), np.maximum(c_hi / mu, c_hi / g_new)
    )
    return lower, upper


def clip_duals(
    raw: np.ndarray,
    lambda_prev: np.ndarray,
    mu: float,
    g_new: np.ndarray,
    c_lo: float,
    c_hi: float,
) -> np.ndarray:
    """Clamp ``raw`` into the safeguard interval around the previous duals."""
    lower, upper = clip_interval(lambda_prev, mu, g_new, c_lo, c_hi)
    return np.clip(np.asarray(raw, dtype=float), lower, upper)


def stopping_satisfied(
    problem: RicoProblem,
    w: PrimalDualPair,
    mu: float,
    conds: StoppingConditions,
) -> StoppingCheck:
    """Evaluate the inner stopping conditions at ``w``.

    The eigenvalue of the condensed operator is only computed when the
    second-order clause is enabled and every other clause already holds.
    """
    x, lam = w.x, w.lam
    g = problem.constraint_values(x)
    feasible = bool(np.all(g > 0.0))
    duals_positive = bool(np.all(lam > 0.0))
    grad_norm = problem.manifold.norm(x, problem.grad_lagrangian(w))
    compl_norm = float(np.linalg.norm(lam * g - mu))
    satisfied = (
        feasible
        and duals_positive
        and grad_norm <= conds.sigma_grad(mu)
        and compl_norm <= conds.compl_tolerance(mu)
    )
    min_eig = None
    if satisfied and conds.second_order:
        basis = problem.manifold.tangent_basis(x)
        matrix = problem.manifold.operator_matrix(
            x, basis, problem.condensed_operator(w)
        )
        min_eig = min_eigenvalue(matrix)
        satisfied = min_eig >= -conds.sigma_sosp(mu)
    return StoppingCheck(
        grad_norm=grad_norm,
        compl_norm=compl_norm,
        feasible=feasible,
        duals_positive=duals_positive,
        min_eig=min_eig,
        satisfied=satisfied,
    )


def _check_start(problem: RicoProblem, w: PrimalDualPair) -> None:
    if not problem.strict_feasible(w.x):
        msg = "Inner iteration must start from a strictly feasible point"
        raise InvalidStateError(msg)
    if np.any(w.lam <= 0.0):
        msg = "Inner iteration must start from positive multipliers"
        raise InvalidStateError(msg)


def inner_solve(
    problem: RicoProblem,
    w0: PrimalDualPair,
    mu: float,
    delta0: float,
    conds: StoppingConditions,
    cfg: InnerConfig,
    *,
    outer_iter: int = 0,
    clock: Callable[[], float] = time.perf_counter,
    start_time: float = 0.0,
    deadline: float | None = None,
) -> InnerResult:
    """Run the inner iteration at barrier parameter ``mu``.

    Parameters
    ----------
    problem:
        The constrained problem.
    w0:
        Strictly feasible start with positive multipliers.
    mu:
        Barrier parameter.
    delta0:
        Initial radius in ``(0, cfg.delta_max]``.
    conds:
        Stopping conditions tested on every candidate.
    cfg:
        Inner iteration parameters.
    outer_iter:
        Outer index stamped on every record.
    clock, start_time, deadline:
        Time source, the reading that counts as time zero for ``elapsed_s``,
        and an optional absolute deadline on the same clock.

    Returns
    -------
    InnerResult
        The carried iterate, the final radius, a status and one record per
        iteration. Running out of iterations or time and a radius below
        ``MIN_RADIUS`` are statuses, not errors.

    Raises
    ------
    InvalidStateError
        If ``w0`` is not strictly feasible or has a nonpositive multiplier.
    SolverFailureError
        If the subproblem solver returns a zero step at a nonzero gradient,
        or the exact solver fails.
    """
    _check_start(problem, w0)
    if not 0.0 < delta0 <= cfg.delta_max:
        msg = f"Initial radius must lie in (0, {cfg.delta_max}], got {delta0}"
        raise InvalidInputError(msg)
    manifold = problem.manifold
    w = w0
    delta = float(delta0)
    merit_x = problem.merit(w.x, mu)
    f_x = problem.objective_value(w.x)
    residual_x = problem.kkt_residual(w)
    records: list[InnerIterationRecord] = []
    status = InnerStatus.MAX_ITER

    for ell in range(cfg.max_inner_iters):
        if deadline is not None and clock() >= deadline:
            status = InnerStatus.TIME_BUDGET
            break
        x, lam = w.x, w.lam
        rgrads = problem.constraint_rgrads(x)
        phi = problem.barrier_gradient(x, mu)
        inst = TrsInstance(
            manifold=manifold,
            x=x,
            apply_H=problem.condensed_operator(w),
            grad=phi,
            radius=delta,
        )
        solution = solve_subproblem(
            inst,
            cfg.subsolver,
            tcg_kappa=cfg.tcg_kappa,
            tcg_theta=cfg.tcg_theta,
            exact_tol=cfg.exact_tol,
        )
        d = solution.d
        d_norm = manifold.norm(x, d)
        if d_norm == 0.0 and manifold.norm(x, phi) > 0.0:
            msg = (
                f"Subproblem solver '{cfg.subsolver}' returned a zero step at "
                f"a nonzero barrier gradient (outer {outer_iter}, inner {ell})"
            )
            raise SolverFailureError(msg)
        dual_raw = lam + dual_newton_step(problem, w, mu, d, rgrads)

        try:
            x_new = manifold.retract(x, d)
        except ManifoldConsistencyError:
            logger.warning("Retraction left the manifold at radius %.3e", delta)
            x_new = None
        g_new = problem.constraint_values(x_new) if x_new is not None else None
        feasible = g_new is not None and bool(np.all(g_new > 0.0))

        ared = pred = rho = None
        accepted = False
        dual_clipped = None
        clip_margin = None
        delta_next = delta
        if not feasible:
            delta_next = cfg.contract_coeff * d_norm
            event = InnerEvent.SHRINK
            logger.warning(
                "Infeasible retraction at outer %d inner %d: radius %.3e -> %.3e",
                outer_iter,
                ell,
                delta,
                delta_next,
            )
        else:
            candidate = PrimalDualPair(x=x_new, lam=dual_raw)
            check = stopping_satisfied(problem, candidate, mu, conds)
            merit_new = problem.merit(x_new, mu)
            shift = ratio_regularization(merit_x)
            ared = merit_x - merit_new + shift
            pred = solution.model_decrease + shift
            rho = ared / pred if pred != 0.0 else None
            accepted = pred > 0.0 and ared > cfg.eta * pred
            if check.satisfied:
                event = InnerEvent.CONVERGED
                w, merit_x = candidate, merit_new
                status = InnerStatus.CONVERGED
            else:
                delta_next = tr_radius_update(
                    delta, ared, pred, d_norm, cfg.delta_max
                )
                if accepted:
                    event = InnerEvent.ACCEPTED
                    if problem.m:
                        lower, upper = clip_interval(
                            lam, mu, g_new, cfg.clip_c_lo, cfg.clip_c_hi
                        )
                        dual_clipped = np.clip(dual_raw, lower, upper)
                        clip_margin = float(
                            min(
                                np.min(dual_clipped - lower),
                                np.min(upper - dual_clipped),
                            )
                        )
                    else:
                        dual_clipped = dual_raw
                    w = PrimalDualPair(x=x_new, lam=dual_clipped)
                    merit_x = merit_new
                else:
                    event = InnerEvent.REJECTED
            if event is not InnerEvent.REJECTED:
                f_x = problem.objective_value(w.x)
                residual_x = problem.kkt_residual(w)

        g_carried = problem.constraint_values(w.x)
        record = InnerIterationRecord(
            outer_iter=outer_iter,
            ell=ell,
            mu=mu,
            delta=delta,
            d_norm=d_norm,
            ared=ared,
            pred=pred,
            rho=rho,
            accepted=accepted,
            feasible_retraction=feasible,
            event=event,
            dual_raw=dual_raw,
            dual_clipped=dual_clipped,
            merit=merit_x,
            f=f_x,
            residual=residual_x,
            min_constraint=float(g_carried.min()) if g_carried.size else None,
            min_dual=float(w.lam.min()) if w.lam.size else None,
            clip_margin=clip_margin,
            elapsed_s=clock() - start_time,
        )
        records.append(record)
        logger.debug(
            "outer %d inner %d: %s, delta %.3e, |d| %.3e, rho %s",
            outer_iter,
            ell,
            event,
            delta,
            d_norm,
            f"{rho:.3e}" if rho is not None else "-",
        )
        if status is InnerStatus.CONVERGED:
            return InnerResult(w=w, delta=delta, status=status, records=records)
        if delta_next < MIN_RADIUS:
            status = InnerStatus.RADIUS_COLLAPSE
            break
        delta = delta_next

    if status is InnerStatus.MAX_ITER:
        logger.warning(
            "Inner iteration hit the limit of %d iterations at mu = %.3e",
            cfg.max_inner_iters,
            mu,
        )
    elif status is InnerStatus.TIME_BUDGET:
        logger.warning("Time budget exhausted during inner iteration at mu = %.3e", mu)
    else:
        logger.warning("Trust-region radius collapsed at mu = %.3e", mu)
    return InnerResult(w=w, delta=delta, status=status, records=records)
