"""Finite-difference validation of function oracles.

Two families of checks are run per oracle:

* ambient consistency: central differences of ``value`` against ``egrad`` and
  of ``egrad`` against ``ehess`` along a random ambient direction;
* Riemannian Taylor checks along ``t -> R_x(t v)``: the first-order remainder
  must decay like ``t^2`` and, because the retraction is second order, the
  second-order remainder like ``t^3``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.manifolds.base import as_generator
from riptrm.manifolds.product import ProductArray

if TYPE_CHECKING:
    from riptrm.manifolds.base import Manifold, Point, Seed
    from riptrm.problem.models import FunctionOracle
    from riptrm.problem.rico import RicoProblem

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
FD_RTOL = 1e-5
TAYLOR_T0 = 1e-2
TAYLOR_HALVINGS = 8
TAYLOR_FIT_POINTS = 4
SLOPE_SLACK = 0.25


@dataclass(frozen=True)
class GradcheckReport:
    """Outcome of the derivative checks for one oracle."""

    name: str
    egrad_rel_err: float
    ehess_rel_err: float
    rgrad_rel_err: float
    grad_slope: float
    hess_slope: float

    @property
    def passed(self) -> bool:
        return (
            self.egrad_rel_err <= FD_RTOL
            and self.ehess_rel_err <= FD_RTOL
            and self.rgrad_rel_err <= FD_RTOL
            and self.grad_slope >= 2.0 - SLOPE_SLACK
            and self.hess_slope >= 3.0 - SLOPE_SLACK
        )


def ambient_inner(a: Any, b: Any) -> float:
    """Frobenius inner product, summed over factors for product arrays."""
    if isinstance(a, ProductArray):
        return float(sum(ambient_inner(ai, bi) for ai, bi in zip(a, b, strict=True)))
    return float(np.sum(np.asarray(a) * np.asarray(b)))


def ambient_norm(a: Any) -> float:
    return math.sqrt(max(ambient_inner(a, a), 0.0))


def _random_ambient(manifold: Manifold, rng: np.random.Generator) -> Any:
    shape = manifold.ambient_shape()
    if isinstance(shape, tuple) and shape and isinstance(shape[0], tuple):
        return ProductArray(rng.standard_normal(s) for s in shape)
    return rng.standard_normal(shape)


def taylor_slope(
    errors: np.ndarray,
    steps: np.ndarray,
    floor: float,
    window: int | None = None,
) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)``.

    Remainders that sit at the rounding floor carry no information; if all of
    them do, the expansion is exact and ``+inf`` is returned. With ``window``
    only that many of the smallest informative steps enter the fit.
    """
    keep = np.flatnonzero(errors > floor)
    if window is not None:
        keep = keep[np.argsort(steps[keep])[:window]]
    if keep.size < 2:
        return math.inf
    slope, _ = np.polyfit(np.log(steps[keep]), np.log(errors[keep]), 1)
    return float(slope)


def check_oracle(
    manifold: Manifold,
    oracle: FunctionOracle,
    x: Point,
    seed: Seed = None,
) -> GradcheckReport:
    """Run every derivative check for ``oracle`` at ``x``.

    Parameters
    ----------
    manifold:
        Manifold the oracle is defined on.
    oracle:
        The function to check.
    x:
        Base point, on the manifold.
    seed:
        Seed for the random ambient and tangent directions.
    """
    rng = as_generator(seed)

    # Ambient consistency.
    a = _random_ambient(manifold, rng)
    a = a / ambient_norm(a)
    h = FD_STEP
    fd_grad = (oracle.value(x + h * a) - oracle.value(x - h * a)) / (2 * h)
    an_grad = ambient_inner(oracle.egrad(x), a)
    egrad_rel_err = abs(fd_grad - an_grad) / max(abs(an_grad), 1.0)
    fd_hess = (oracle.egrad(x + h * a) - oracle.egrad(x - h * a)) / (2 * h)
    an_hess = oracle.ehess(x, a)
    ehess_rel_err = ambient_norm(fd_hess - an_hess) / max(ambient_norm(an_hess), 1.0)

    # Riemannian checks along the retraction curve.
    v = manifold.sample_tangent(x, rng)
    v = v / manifold.norm(x, v)
    egrad = oracle.egrad(x)
    rgrad = manifold.egrad_to_rgrad(x, egrad)
    hv = manifold.ehess_to_rhess(x, egrad, oracle.ehess(x, v), v)
    f0 = float(oracle.value(x))
    slope1 = manifold.inner(x, rgrad, v)
    curvature = manifold.inner(x, hv, v)

    def along(t: float) -> float:
        return float(oracle.value(manifold.retract(x, t * v)))

    fd_dir = (along(h) - along(-h)) / (2 * h)
    rgrad_rel_err = abs(fd_dir - slope1) / max(abs(slope1), 1.0)

    steps = TAYLOR_T0 * 0.5 ** np.arange(TAYLOR_HALVINGS + 1)
    values = np.array([along(t) for t in steps])
    first = np.abs(values - f0 - steps * slope1)
    second = np.abs(values - f0 - steps * slope1 - 0.5 * steps**2 * curvature)
    floor = 1e4 * np.finfo(float).eps * (1.0 + abs(f0))
    report = GradcheckReport(
        name=oracle.name,
        egrad_rel_err=float(egrad_rel_err),
        ehess_rel_err=float(ehess_rel_err),
        rgrad_rel_err=float(rgrad_rel_err),
        grad_slope=taylor_slope(first, steps, floor, TAYLOR_FIT_POINTS),
        hess_slope=taylor_slope(second, steps, floor, TAYLOR_FIT_POINTS),
    )
    logger.debug("Gradcheck %s: %s", oracle.name, report)
    return report


def check_problem(
    problem: RicoProblem, x: Point, seed: Seed = None
) -> list[GradcheckReport]:
    """Check the objective and every constraint of ``problem`` at ``x``."""
    rng = as_generator(seed)
    oracles = [problem.objective, *problem.constraints]
    return [check_oracle(problem.manifold, oracle, x, rng) for oracle in oracles]
