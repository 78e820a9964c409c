"""CSV trace of a run and the JSON sidecar holding its final iterate."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import astuple, dataclass, fields
from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.errors import TraceFormatError
from riptrm.problem.models import PrimalDualPair
from riptrm.solver.models import InnerIterationRecord, OuterSummary

if TYPE_CHECKING:
    from pathlib import Path

    from riptrm.manifolds.base import Manifold
    from riptrm.solver.models import SolverTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunRecord:
    """One CSV row.

    Inner iterations carry ``inner_iter``; outer summaries (including the
    start point, ``outer_iter == 0``) leave it empty and instead carry the
    curvature columns.
    """

    outer_iter: int
    inner_iter: int | None
    elapsed_s: float
    mu: float
    delta: float
    f: float
    merit: float
    residual_total: float
    grad_lag_norm: float
    compl_norm: float
    min_eig_H: float | None
    second_order_measure: float | None
    accepted: bool | None
    status: str
    ared: float | None
    pred: float | None
    d_norm: float | None
    feasible_retraction: bool | None
    min_constraint: float | None
    min_dual: float | None
    clip_margin: float | None

    @property
    def is_outer(self) -> bool:
        return self.inner_iter is None


COLUMNS = tuple(f.name for f in fields(RunRecord))


def _from_inner(rec: InnerIterationRecord) -> RunRecord:
    return RunRecord(
        outer_iter=rec.outer_iter,
        inner_iter=rec.ell,
        elapsed_s=rec.elapsed_s,
        mu=rec.mu,
        delta=rec.delta,
        f=rec.f,
        merit=rec.merit,
        residual_total=rec.residual.total,
        grad_lag_norm=rec.residual.grad_lag_norm,
        compl_norm=rec.residual.compl,
        min_eig_H=None,
        second_order_measure=None,
        accepted=rec.accepted,
        status=str(rec.event),
        ared=rec.ared,
        pred=rec.pred,
        d_norm=rec.d_norm,
        feasible_retraction=rec.feasible_retraction,
        min_constraint=rec.min_constraint,
        min_dual=rec.min_dual,
        clip_margin=rec.clip_margin,
    )


def _from_outer(summary: OuterSummary) -> RunRecord:
    return RunRecord(
        outer_iter=summary.outer_iter,
        inner_iter=None,
        elapsed_s=summary.elapsed_s,
        mu=summary.mu,
        delta=summary.delta_hat,
        f=summary.f,
        merit=summary.merit,
        residual_total=summary.residual.total,
        grad_lag_norm=summary.residual.grad_lag_norm,
        compl_norm=summary.residual.compl,
        min_eig_H=summary.min_eig_H,
        second_order_measure=summary.second_order_measure,
        accepted=None,
        status=str(summary.status),
        ared=None,
        pred=None,
        d_norm=None,
        feasible_retraction=None,
        min_constraint=None,
        min_dual=None,
        clip_margin=None,
    )


def records_from_trace(trace: SolverTrace) -> list[RunRecord]:
    """Flatten a solver trace into CSV rows, preserving time order."""
    return [
        _from_inner(e) if isinstance(e, InnerIterationRecord) else _from_outer(e)
        for e in trace.events
    ]


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    return str(value)


def _parse(text: str, annotation: str, column: str, row: int) -> Any:
    optional = annotation.endswith("| None")
    kind = annotation.removesuffix("| None").strip()
    if text == "":
        if optional:
            return None
        if kind == "str":
            return ""
        msg = f"Row {row}: column '{column}' must not be empty"
        raise TraceFormatError(msg)
    try:
        match kind:
            case "int":
                return int(text)
            case "float":
                return float(text)
            case "bool":
                if text not in ("true", "false"):
                    raise ValueError(text)
                return text == "true"
            case _:
                return text
    except ValueError as e:
        msg = f"Row {row}: cannot parse {text!r} in column '{column}' as {kind}"
        raise TraceFormatError(msg) from e


def write_trace_csv(path: Path, records: list[RunRecord]) -> None:
    """Write ``records`` with a header row in :data:`COLUMNS` order."""
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in records:
            writer.writerow(_format(v) for v in astuple(record))
    logger.info("Wrote %d trace rows to %s", len(records), path)


def read_trace_csv(path: Path) -> list[RunRecord]:
    """Parse a trace written by :func:`write_trace_csv`.

    Raises
    ------
    TraceFormatError
        If the file is missing, the header differs from :data:`COLUMNS` or a
        field cannot be parsed. Row numbers in messages count the header as
        row 1.
    """
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        msg = f"Cannot read trace {path}: {e}"
        raise TraceFormatError(msg) from e
    if not rows or tuple(rows[0]) != COLUMNS:
        msg = f"Trace {path} does not start with the expected header"
        raise TraceFormatError(msg)
    annotations = [(f.name, str(f.type)) for f in fields(RunRecord)]
    records = []
    for number, row in enumerate(rows[1:], start=2):
        if len(row) != len(COLUMNS):
            msg = f"Row {number}: expected {len(COLUMNS)} fields, got {len(row)}"
            raise TraceFormatError(msg)
        values = {
            name: _parse(text, annotation, name, number)
            for (name, annotation), text in zip(annotations, row, strict=True)
        }
        records.append(RunRecord(**values))
    return records


def sidecar_path(out: Path) -> Path:
    """``trace.csv`` -> ``trace.csv.final.json``."""
    return out.with_name(out.name + ".final.json")


def write_final_sidecar(
    out: Path,
    manifold: Manifold,
    w: PrimalDualPair,
    settings: dict[str, Any],
) -> Path:
    """Store the final iterate and the run settings next to the CSV."""
    path = sidecar_path(out)
    payload = {
        "settings": settings,
        "x": manifold.point_to_json(w.x),
        "lam": [float(v) for v in w.lam],
    }
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def read_final_sidecar(
    out: Path, manifold: Manifold | None = None
) -> tuple[dict[str, Any], PrimalDualPair | None]:
    """Load the settings and, when ``manifold`` is given, the final iterate.

    Raises
    ------
    TraceFormatError
        If the sidecar is missing or malformed.
    """
    path = sidecar_path(out)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        settings = dict(payload["settings"])
        if manifold is None:
            return settings, None
        x = manifold.point_from_json(payload["x"])
        lam = np.array(payload["lam"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as e:
        msg = f"Cannot read final iterate from {path}: {e}"
        raise TraceFormatError(msg) from e
    return settings, PrimalDualPair(x=x, lam=lam)
