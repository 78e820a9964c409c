"""Data models for the trust-region subproblem."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING, Any

from riptrm.errors import InvalidInputError

if TYPE_CHECKING:
    from collections.abc import Callable

    from riptrm.manifolds.base import Manifold, Point, Tangent


class TrsStatus(StrEnum):
    """How a subproblem solver terminated."""

    INTERIOR = "interior"
    BOUNDARY = "boundary"
    HARD_CASE = "hard-case"
    NEGATIVE_CURVATURE_BOUNDARY = "negative-curvature-boundary"
    MAX_ITER = "max-iter"


class Subsolver(StrEnum):
    """Available subproblem solvers."""

    CAUCHY = "cauchy"
    TCG = "tcg"
    EXACT = "exact"


@dataclass(frozen=True, eq=False)
class TrsInstance:
    """``min 1/2 <H d, d> + <grad, d>`` over ``||d|| <= radius`` in ``T_x M``.

    ``apply_H`` must be self-adjoint with respect to the metric at ``x``.
    """

    manifold: Manifold
    x: Point
    apply_H: Callable[[Tangent], Tangent]
    grad: Tangent
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            msg = f"Trust-region radius must be positive, got {self.radius}"
            raise InvalidInputError(msg)

    @cached_property
    def basis(self) -> list[Tangent]:
        """Orthonormal basis of ``T_x M``, computed on first use."""
        return self.manifold.tangent_basis(self.x)

    def inner(self, u: Tangent, v: Tangent) -> float:
        return self.manifold.inner(self.x, u, v)

    def norm(self, v: Tangent) -> float:
        return self.manifold.norm(self.x, v)


@dataclass(frozen=True, eq=False)
class TrsSolution:
    """A step ``d`` with its multiplier ``nu`` (if the solver produces one)."""

    d: Any
    status: TrsStatus
    model_decrease: float
    nu: float | None = None
    iterations: int = 0


@dataclass(frozen=True)
class OptimalityReport:
    """Residuals of the global optimality conditions for a candidate step.

    The conditions are ``(H + nu I) d = -grad``, ``nu (radius - ||d||) = 0``,
    ``||d|| <= radius`` and ``H + nu I`` positive semidefinite.
    """

    stationarity: float
    complementarity: float
    radius_excess: float
    psd_residual: float
    nu_negative: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(
            self.stationarity,
            self.complementarity,
            self.radius_excess,
            self.psd_residual,
            self.nu_negative,
        ) <= self.tol
