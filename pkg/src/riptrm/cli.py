"""Command-line interface: run, verify, gradcheck and trs-bench."""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from dotenv import load_dotenv

from riptrm.bench.config import (
    ClockKind,
    ProblemName,
    RunSettings,
    SecondOrder,
    read_settings_file,
    resolve_settings,
)
from riptrm.bench.plot import write_plot_script
from riptrm.bench.problems import build_problem
from riptrm.bench.trace import (
    read_final_sidecar,
    read_trace_csv,
    records_from_trace,
    write_final_sidecar,
    write_trace_csv,
)
from riptrm.bench.trs_instances import GRID_POINTS, run_trs_bench
from riptrm.bench.verify import VerifySettings, verify_run
from riptrm.errors import InvalidInputError, RiptrmError, TraceFormatError
from riptrm.problem.gradcheck import check_problem
from riptrm.solver.outer import outer_solve
from riptrm.trs.models import Subsolver

if TYPE_CHECKING:
    from collections.abc import Sequence

    from riptrm.solver.models import OuterConfig

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_OUT = Path("trace.csv")


def configure_logging() -> None:
    """Set the root level from ``RIPTRM_LOG`` (default ``WARNING``)."""
    name = os.environ.get("RIPTRM_LOG", "WARNING").strip().upper()
    level = logging.getLevelNamesMapping().get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s | %(message)s")


def _add_settings_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", choices=[p.value for p in ProblemName])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--config", type=Path, help="flat key = value settings file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riptrm",
        description="Interior-point trust-region method on Riemannian manifolds.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="solve a built-in problem")
    _add_settings_flags(run)
    run.add_argument("--subsolver", choices=[s.value for s in Subsolver])
    run.add_argument("--second-order", choices=[s.value for s in SecondOrder])
    run.add_argument("--budget-s", type=float)
    run.add_argument("--max-outer", type=int)
    run.add_argument("--target-residual", type=float)
    run.add_argument("--clock", choices=[c.value for c in ClockKind])
    run.add_argument("--out", type=Path, default=DEFAULT_OUT)
    run.add_argument("--plot-script", type=Path)
    run.add_argument(
        "--repeat", type=int, default=1, help="run seeds seed..seed+K-1 concurrently"
    )

    verify = commands.add_parser("verify", help="audit a trace written by run")
    verify.add_argument("trace", type=Path)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference checks")
    _add_settings_flags(gradcheck)

    bench = commands.add_parser("trs-bench", help="random subproblem benchmark")
    bench.add_argument("--count", type=int, default=1000)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--grid-points", type=int, default=GRID_POINTS)
    return parser


def settings_from_args(args: argparse.Namespace) -> RunSettings:
    """Defaults, then the ``--config`` file, then explicit flags.

    Raises
    ------
    InvalidInputError
        If the file or any value is invalid.
    """
    file_values = read_settings_file(args.config) if args.config else {}
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "problem",
            "seed",
            "subsolver",
            "second_order",
            "budget_s",
            "max_outer",
            "target_residual",
            "clock",
        )
    }
    return resolve_settings(file_values, overrides)


def repeat_path(out: Path, index: int) -> Path:
    """``trace.csv`` -> ``trace-rep<index>.csv``."""
    return out.with_name(f"{out.stem}-rep{index}{out.suffix}")


def execute_run(
    settings: RunSettings,
    cfg: OuterConfig,
    out: Path,
    plot_script: Path | None = None,
) -> int:
    """Solve one problem and write its trace, sidecar and plot script."""
    try:
        problem, w0 = build_problem(settings)
        result = outer_solve(problem, w0, cfg, clock=settings.make_clock())
    except RiptrmError:
        logger.exception("Run of %s failed", settings.problem)
        return EXIT_FAILURE
    try:
        write_trace_csv(out, records_from_trace(result.trace))
        write_final_sidecar(out, problem.manifold, result.w, settings.to_dict())
        if plot_script is not None:
            write_plot_script(plot_script, out, title=problem.name)
    except OSError:
        logger.exception("Could not write the outputs of %s", out)
        return EXIT_USAGE
    print(
        f"{problem.name}: {result.status} after {result.outer_iters} outer "
        f"iterations, residual {result.residual.total:.3e} -> {out}"
    )
    return EXIT_OK


async def run_sweep(
    settings: RunSettings,
    cfg: OuterConfig,
    out: Path,
    repeat: int,
    plot_script: Path | None = None,
) -> list[int]:
    """Run seeds ``seed .. seed + repeat - 1`` concurrently, one file each."""
    jobs = [
        asyncio.to_thread(
            execute_run,
            settings.with_seed(settings.seed + i),
            cfg,
            repeat_path(out, i),
            repeat_path(plot_script, i) if plot_script is not None else None,
        )
        for i in range(repeat)
    ]
    return list(await asyncio.gather(*jobs))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        settings = settings_from_args(args)
        cfg = settings.outer_config()
    except InvalidInputError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    if args.repeat < 1:
        logger.error("--repeat must be at least 1, got %d", args.repeat)
        return EXIT_USAGE
    if args.repeat == 1:
        return execute_run(settings, cfg, args.out, args.plot_script)
    codes = asyncio.run(
        run_sweep(settings, cfg, args.out, args.repeat, args.plot_script)
    )
    return max(codes)


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        records = read_trace_csv(args.trace)
        raw_settings, _ = read_final_sidecar(args.trace)
        settings = RunSettings(**raw_settings)
        problem, _ = build_problem(settings, with_start=False)
        _, final = read_final_sidecar(args.trace, problem.manifold)
    except (TraceFormatError, InvalidInputError, TypeError) as e:
        logger.error("Cannot verify %s: %s", args.trace, e)
        return EXIT_USAGE
    report = verify_run(
        records,
        problem,
        final,
        VerifySettings(
            eta=settings.eta,
            contract_coeff=settings.contract_coeff,
            delta_max=settings.delta_max,
            active_tol=settings.active_tol,
        ),
    )
    for violation in report.violations:
        print(f"VIOLATION {violation}")
    print(
        f"residual {report.residual_reported!r} (recomputed "
        f"{report.residual_recomputed!r}), second-order measure "
        f"{report.measure_reported!r} (recomputed {report.measure_recomputed!r})"
    )
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_gradcheck(args: argparse.Namespace) -> int:
    try:
        settings = settings_from_args(args)
    except InvalidInputError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    try:
        problem, w0 = build_problem(settings)
    except RiptrmError:
        logger.exception("Could not build %s", settings.problem)
        return EXIT_FAILURE
    reports = check_problem(problem, w0.x, seed=settings.seed)
    for report in reports:
        verdict = "ok" if report.passed else "FAIL"
        print(
            f"{verdict:4} {report.name or '?'}: egrad {report.egrad_rel_err:.2e}, "
            f"ehess {report.ehess_rel_err:.2e}, rgrad {report.rgrad_rel_err:.2e}, "
            f"slopes {report.grad_slope:.2f} / {report.hess_slope:.2f}"
        )
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE


def cmd_trs_bench(args: argparse.Namespace) -> int:
    if args.count < 1:
        logger.error("--count must be at least 1, got %d", args.count)
        return EXIT_USAGE
    report = run_trs_bench(args.count, args.seed, grid_points=args.grid_points)
    for failure in report.failures:
        print(f"FAIL {failure}")
    print(
        f"{report.count} instances ({report.hard_cases} hard cases), "
        f"{len(report.failures)} failures"
    )
    return EXIT_OK if report.ok else EXIT_FAILURE


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and dispatch; returns the process exit code."""
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    match args.command:
        case "run":
            return cmd_run(args)
        case "verify":
            return cmd_verify(args)
        case "gradcheck":
            return cmd_gradcheck(args)
        case _:
            return cmd_trs_bench(args)


def start() -> None:
    """Run the command-line interface (used by the console script)."""
    sys.exit(main())


if __name__ == "__main__":
    start()
