"""Data models for inequality-constrained problems on manifolds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.errors import InvalidInputError

if TYPE_CHECKING:
    from collections.abc import Callable


@dataclass(frozen=True)
class FunctionOracle:
    """A smooth function given through its ambient-space derivatives.

    ``egrad(x)`` is the Euclidean gradient of a smooth extension and
    ``ehess(x, v)`` its directional derivative along the ambient vector ``v``.
    """

    value: Callable[[Any], float]
    egrad: Callable[[Any], Any]
    ehess: Callable[[Any, Any], Any]
    name: str = ""


@dataclass(frozen=True, eq=False)
class PrimalDualPair:
    """Primal point ``x`` together with the multiplier vector ``lam``."""

    x: Any
    lam: np.ndarray

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        object.__setattr__(self, "lam", lam)

    def with_lam(self, lam: np.ndarray) -> PrimalDualPair:
        return PrimalDualPair(x=self.x, lam=lam)


@dataclass(frozen=True)
class ResidualBreakdown:
    """Components of the KKT residual of a primal-dual pair.

    ``total`` is the Euclidean norm of all components and is ``+inf`` exactly
    when ``manvio`` is.
    """

    grad_lag_norm: float
    dual_neg: float
    primal_neg: float
    compl: float
    manvio: float
    total: float

    @classmethod
    def from_components(
        cls,
        grad_lag_norm: float,
        dual_neg: float,
        primal_neg: float,
        compl: float,
        manvio: float,
    ) -> ResidualBreakdown:
        if math.isinf(manvio):
            total = math.inf
        else:
            total = math.sqrt(
                grad_lag_norm**2 + dual_neg**2 + primal_neg**2 + compl**2 + manvio**2
            )
        return cls(
            grad_lag_norm=grad_lag_norm,
            dual_neg=dual_neg,
            primal_neg=primal_neg,
            compl=compl,
            manvio=manvio,
            total=total,
        )


def check_multiplier_count(pair: PrimalDualPair, m: int) -> None:
    """Raise ``InvalidInputError`` unless ``pair.lam`` has length ``m``."""
    if pair.lam.shape != (m,):
        msg = f"Expected {m} multipliers, got {pair.lam.shape[0]}"
        raise InvalidInputError(msg)
