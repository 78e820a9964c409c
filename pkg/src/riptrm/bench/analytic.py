"""Built-in one-dimensional problem: minimise ``x`` subject to ``x >= 1``.

The central path is ``x(mu) = 1 + mu`` with ``lam(mu) = 1`` and the KKT point
is ``(1, 1)``.
"""

from __future__ import annotations

import numpy as np

from riptrm.manifolds.euclidean import Euclidean
from riptrm.problem.models import FunctionOracle, PrimalDualPair
from riptrm.problem.rico import RicoProblem


def _zero_hessian(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


def build_analytic_1d() -> tuple[RicoProblem, PrimalDualPair]:
    """Return the problem and the start ``x = 2``, ``lam = 1``."""
    objective = FunctionOracle(
        value=lambda x: float(x[0]),
        egrad=lambda x: np.ones_like(x),
        ehess=_zero_hessian,
        name="f",
    )
    constraint = FunctionOracle(
        value=lambda x: float(x[0]) - 1.0,
        egrad=lambda x: np.ones_like(x),
        ehess=_zero_hessian,
        name="x - 1",
    )
    problem = RicoProblem(Euclidean(1), objective, [constraint], name="analytic-1d")
    return problem, PrimalDualPair(x=np.array([2.0]), lam=np.array([1.0]))
