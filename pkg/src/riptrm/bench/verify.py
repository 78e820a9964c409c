"""Audit a run trace and recompute the stationarity measures at its final iterate."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from riptrm.solver.inner import ratio_regularization
from riptrm.solver.models import InnerEvent

if TYPE_CHECKING:
    from riptrm.bench.trace import RunRecord
    from riptrm.problem.models import PrimalDualPair
    from riptrm.problem.rico import RicoProblem

logger = logging.getLogger(__name__)

RECOMPUTE_TOL = 1e-10
RADIUS_RTOL = 1e-12


@dataclass(frozen=True)
class VerifySettings:
    """Solver parameters the audit needs to re-derive decisions."""

    eta: float
    contract_coeff: float
    delta_max: float
    active_tol: float


@dataclass
class VerifyReport:
    violations: list[str] = field(default_factory=list)
    residual_reported: float | None = None
    residual_recomputed: float | None = None
    measure_reported: float | None = None
    measure_recomputed: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def flag(self, row: int, message: str) -> None:
        self.violations.append(f"row {row}: {message}")


def csv_row(index: int) -> int:
    """CSV line number of the record at ``index``; the header is row 1."""
    return index + 2


def _close(reported: float | None, recomputed: float) -> bool:
    if reported is None:
        return False
    if math.isinf(reported) or math.isinf(recomputed):
        return reported == recomputed
    return abs(reported - recomputed) <= RECOMPUTE_TOL * max(1.0, abs(recomputed))


def _audit_inner(
    report: VerifyReport,
    row: int,
    rec: RunRecord,
    previous: RunRecord | None,
    settings: VerifySettings,
) -> None:
    feasible = bool(rec.feasible_retraction)
    if rec.ared is None or rec.pred is None:
        expected = False
    else:
        expected = feasible and rec.pred > 0.0 and rec.ared > settings.eta * rec.pred
    if bool(rec.accepted) != expected:
        report.flag(
            row,
            f"accepted={rec.accepted} but ared={rec.ared!r}, pred={rec.pred!r}, "
            f"feasible={feasible}",
        )
    if rec.min_constraint is not None and not rec.min_constraint > 0.0:
        report.flag(row, f"iterate not strictly feasible ({rec.min_constraint!r})")
    if rec.min_dual is not None and not rec.min_dual > 0.0:
        report.flag(row, f"nonpositive multiplier (min lam {rec.min_dual!r})")
    if rec.clip_margin is not None and rec.clip_margin < 0.0:
        report.flag(row, f"clipped multiplier outside bounds ({rec.clip_margin!r})")
    if previous is None or previous.outer_iter != rec.outer_iter:
        return
    if rec.accepted and rec.merit > previous.merit + ratio_regularization(
        previous.merit
    ):
        report.flag(
            row,
            "merit increased on an accepted step "
            f"({previous.merit!r} -> {rec.merit!r})",
        )
    if previous.status == InnerEvent.SHRINK and previous.d_norm is not None:
        expected_delta = settings.contract_coeff * previous.d_norm
        if not math.isclose(rec.delta, expected_delta, rel_tol=RADIUS_RTOL):
            report.flag(
                row,
                f"radius {rec.delta!r} after an infeasible step, "
                f"expected {expected_delta!r}",
            )


def verify_run(
    records: list[RunRecord],
    problem: RicoProblem,
    final: PrimalDualPair,
    settings: VerifySettings,
) -> VerifyReport:
    """Check the trace invariants and recompute the final measures.

    Parameters
    ----------
    records:
        Rows as read from the CSV.
    problem:
        The problem the run solved, rebuilt from its settings.
    final:
        The final primal-dual pair from the sidecar.
    settings:
        The acceptance, contraction and radius parameters of the run.

    Returns
    -------
    VerifyReport
        Every violation, each naming the CSV row it was found in.
    """
    report = VerifyReport()
    previous_inner: RunRecord | None = None
    last_outer: tuple[int, RunRecord] | None = None
    for index, rec in enumerate(records):
        row = csv_row(index)
        if rec.delta > settings.delta_max:
            report.flag(row, f"radius {rec.delta!r} exceeds {settings.delta_max!r}")
        if rec.is_outer:
            last_outer = (row, rec)
            previous_inner = None
            continue
        _audit_inner(report, row, rec, previous_inner, settings)
        previous_inner = rec

    if last_outer is None:
        report.violations.append("trace has no outer summary row")
        return report
    row, summary = last_outer
    residual = problem.kkt_residual(final).total
    report.residual_reported = summary.residual_total
    report.residual_recomputed = residual
    if not _close(summary.residual_total, residual):
        report.flag(
            row,
            f"final residual {summary.residual_total!r} does not match "
            f"recomputed {residual!r}",
        )
    measure = problem.second_order_measure(final, settings.active_tol)
    report.measure_reported = summary.second_order_measure
    report.measure_recomputed = measure
    if not _close(summary.second_order_measure, measure):
        report.flag(
            row,
            f"final second-order measure {summary.second_order_measure!r} does not "
            f"match recomputed {measure!r}",
        )
    logger.info(
        "Verified %d rows: %d violations", len(records), len(report.violations)
    )
    return report
