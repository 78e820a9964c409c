"""Rosenbrock function on the Grassmann manifold with entrywise lower bounds.

The objective acts on the row-major vectorisation ``v`` of ``X``::

    f(X) = alpha * sum_m (v[m+1] - v[m])**2 + sum_m (1 - v[m])**2

for ``m = 0 .. nk - 2``, subject to ``X_ij >= c`` for every entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from riptrm.errors import InvalidInputError
from riptrm.manifolds.grassmann import Grassmann
from riptrm.problem.models import FunctionOracle, PrimalDualPair
from riptrm.problem.rico import RicoProblem


@dataclass(frozen=True)
class RosenbrockGrassmannSpec:
    n: int = 5
    k: int = 3
    alpha: float = 1e7
    c: float = -0.01

    def __post_init__(self) -> None:
        if not self.n > self.k >= 1:
            msg = f"Need n > k >= 1, got n={self.n}, k={self.k}"
            raise InvalidInputError(msg)
        if not self.alpha > 0.0:
            msg = f"alpha must be positive, got {self.alpha}"
            raise InvalidInputError(msg)


def rosenbrock_oracle(alpha: float) -> FunctionOracle:
    """Oracle for the vectorised Rosenbrock function with coupling ``alpha``."""

    def value(x: np.ndarray) -> float:
        v = np.asarray(x, dtype=float).ravel()
        return float(alpha * np.sum(np.diff(v) ** 2) + np.sum((1.0 - v[:-1]) ** 2))

    def egrad(x: np.ndarray) -> np.ndarray:
        v = np.asarray(x, dtype=float).ravel()
        jumps = np.diff(v)
        grad = np.zeros_like(v)
        grad[1:] += 2.0 * alpha * jumps
        grad[:-1] -= 2.0 * alpha * jumps
        grad[:-1] -= 2.0 * (1.0 - v[:-1])
        return grad.reshape(np.shape(x))

    def ehess(x: np.ndarray, u: np.ndarray) -> np.ndarray:
        w = np.asarray(u, dtype=float).ravel()
        jumps = np.diff(w)
        hess = np.zeros_like(w)
        hess[1:] += 2.0 * alpha * jumps
        hess[:-1] -= 2.0 * alpha * jumps
        hess[:-1] += 2.0 * w[:-1]
        return hess.reshape(np.shape(u))

    return FunctionOracle(value=value, egrad=egrad, ehess=ehess, name="rosenbrock")


def _entry_bound(i: int, j: int, c: float, shape: tuple[int, int]) -> FunctionOracle:
    unit = np.zeros(shape)
    unit[i, j] = 1.0

    return FunctionOracle(
        value=lambda x: float(x[i, j]) - c,
        egrad=lambda x: unit.copy(),
        ehess=lambda x, v: np.zeros(shape),
        name=f"X[{i},{j}] - c",
    )


def build_rosenbrock_grassmann(
    spec: RosenbrockGrassmannSpec | None = None,
) -> tuple[RicoProblem, PrimalDualPair]:
    """Build the problem with start ``[I_k; 0]`` and unit multipliers."""
    spec = spec or RosenbrockGrassmannSpec()
    shape = (spec.n, spec.k)
    constraints = [
        _entry_bound(i, j, spec.c, shape) for i in range(spec.n) for j in range(spec.k)
    ]
    problem = RicoProblem(
        Grassmann(spec.n, spec.k),
        rosenbrock_oracle(spec.alpha),
        constraints,
        name="rosenbrock-grassmann",
    )
    x0 = np.zeros(shape)
    x0[: spec.k, :] = np.eye(spec.k)
    return problem, PrimalDualPair(x=x0, lam=np.ones(len(constraints)))
