"""Build the named benchmark problems from run settings."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from riptrm.bench.analytic import build_analytic_1d
from riptrm.bench.config import ProblemName
from riptrm.bench.feasibility import find_interior_point
from riptrm.bench.rosenbrock import RosenbrockGrassmannSpec, build_rosenbrock_grassmann
from riptrm.bench.stable_linsys import StableLinSysSpec, build_stable_linsys
from riptrm.problem.models import PrimalDualPair

if TYPE_CHECKING:
    from riptrm.bench.config import RunSettings
    from riptrm.problem.rico import RicoProblem

logger = logging.getLogger(__name__)


def build_problem(
    settings: RunSettings, *, with_start: bool = True
) -> tuple[RicoProblem, PrimalDualPair | None]:
    """Return the problem named by ``settings`` and, optionally, its start.

    The stable-linsys start comes from the feasibility phase seeded with
    ``settings.seed``, with unit multipliers. Skipping the start avoids that
    phase when only the problem is needed.
    """
    match settings.problem:
        case ProblemName.ANALYTIC_1D:
            problem, w0 = build_analytic_1d()
        case ProblemName.ROSENBROCK_GRASSMANN:
            spec = RosenbrockGrassmannSpec(
                n=settings.n, k=settings.k, alpha=settings.alpha, c=settings.c
            )
            problem, w0 = build_rosenbrock_grassmann(spec)
        case ProblemName.STABLE_LINSYS:
            data = build_stable_linsys(
                StableLinSysSpec(
                    n=settings.state_dim,
                    h=settings.h,
                    n_obs=settings.n_obs,
                    frac1=settings.frac1,
                    frac2=settings.frac2,
                    noise_sigma=settings.noise_sigma,
                    seed=settings.seed,
                )
            )
            problem = data.problem
            if not with_start:
                return problem, None
            x0 = find_interior_point(
                problem, seed=settings.seed, tol=settings.feasibility_tol
            )
            w0 = PrimalDualPair(x=x0, lam=np.ones(problem.m))
    logger.info("Built %r", problem)
    return problem, w0 if with_start else None
