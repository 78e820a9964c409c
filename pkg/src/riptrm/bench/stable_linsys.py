"""Estimate a stable linear system ``A = (J - R) Q`` from noisy state samples.

``J`` is skew-symmetric and ``R``, ``Q`` are SPD, so every ``A`` of this form
is stable. The objective is the normalised one-step prediction error

    f(J, R, Q) = 1 / (N |x_0|) * sum_{j=1}^{N-1} |x_{j+1} - (I + h A) x_j|

and prior knowledge enters as box bounds ``l <= a_ij <= u`` on a random index
set ``I1 u I2`` plus ring constraints ``(a_ij - b_ij)**2 >= r**2`` on ``I2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from riptrm.errors import FeasibilityFailureError, InvalidInputError
from riptrm.manifolds.euclidean import SkewSymmetric
from riptrm.manifolds.product import Product, ProductArray
from riptrm.manifolds.spd import SymmetricPositiveDefinite
from riptrm.problem.models import FunctionOracle
from riptrm.problem.rico import RicoProblem

if TYPE_CHECKING:
    from collections.abc import Callable

logger = logging.getLogger(__name__)

Index = tuple[int, int]


@dataclass(frozen=True)
class StableLinSysSpec:
    """Sizes and generation parameters.

    ``frac1`` and ``frac2`` give ``|I1| = floor(frac1 * n**2)`` and
    ``|I2| = floor(frac2 * n**2)``.
    """

    n: int = 5
    h: float = 0.02
    n_obs: int = 20
    frac1: float = 0.2
    frac2: float = 0.1
    noise_sigma: float = 1e-3
    seed: int = 0
    ring_radius: float = 0.05
    bound_margin: float = 0.1

    def __post_init__(self) -> None:
        if self.n < 2:
            msg = f"State dimension must be >= 2, got {self.n}"
            raise InvalidInputError(msg)
        if self.n_obs < 2:
            msg = f"Need at least 2 observations, got {self.n_obs}"
            raise InvalidInputError(msg)
        if not self.h > 0.0:
            msg = f"Sampling interval must be positive, got {self.h}"
            raise InvalidInputError(msg)
        if self.frac1 < 0.0 or self.frac2 < 0.0 or self.frac1 + self.frac2 > 1.0:
            msg = (
                "Index-set fractions must be nonnegative and sum to at most 1, "
                f"got {self.frac1} and {self.frac2}"
            )
            raise InvalidInputError(msg)
        if self.noise_sigma < 0.0:
            msg = f"noise_sigma must be nonnegative, got {self.noise_sigma}"
            raise InvalidInputError(msg)
        if not (self.ring_radius > 0.0 and self.bound_margin > 0.0):
            msg = "ring_radius and bound_margin must be positive"
            raise InvalidInputError(msg)


@dataclass(frozen=True, eq=False)
class StableLinSysData:
    """A built instance together with the data it was generated from."""

    problem: RicoProblem
    truth: ProductArray
    states: np.ndarray
    box_indices: tuple[Index, ...]
    ring_indices: tuple[Index, ...]
    lower: float
    upper: float
    ring_centres: dict[Index, float]


def system_matrix(x: ProductArray) -> np.ndarray:
    """``A = (J - R) Q`` for a point ``(J, R, Q)``."""
    j, r, q = x
    return (j - r) @ q


def _system_velocity(x: ProductArray, v: ProductArray) -> np.ndarray:
    j, r, q = x
    jd, rd, qd = v
    return (jd - rd) @ q + (j - r) @ qd


def _pullback(x: ProductArray, grad_a: np.ndarray) -> ProductArray:
    """Ambient gradient in ``(J, R, Q)`` of a function with ``dF/dA = grad_a``."""
    j, r, q = x
    grad_jr = grad_a @ q.T
    return ProductArray((grad_jr, -grad_jr, (j - r).T @ grad_a))


def prediction_error_oracle(states: np.ndarray, h: float) -> FunctionOracle:
    """Oracle for the normalised one-step prediction error of ``states``.

    ``states`` has shape ``(n, N + 1)`` and holds ``x_0, ..., x_N``.
    """
    n, count = states.shape
    n_obs = count - 1
    sources = states[:, 1:n_obs]
    targets = states[:, 2:]
    weight = 1.0 / (n_obs * float(np.linalg.norm(states[:, 0])))
    eye = np.eye(n)

    def residuals(x: ProductArray) -> np.ndarray:
        return targets - (eye + h * system_matrix(x)) @ sources

    def unit_residuals(res: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        norms = np.linalg.norm(res, axis=0)
        safe = np.where(norms > 0.0, norms, 1.0)
        units = np.where(norms > 0.0, res / safe, 0.0)
        return units, norms

    def value(x: ProductArray) -> float:
        return weight * float(np.sum(np.linalg.norm(residuals(x), axis=0)))

    def egrad(x: ProductArray) -> ProductArray:
        units, _ = unit_residuals(residuals(x))
        return _pullback(x, -weight * h * units @ sources.T)

    def ehess(x: ProductArray, v: ProductArray) -> ProductArray:
        units, norms = unit_residuals(residuals(x))
        res_dot = -h * _system_velocity(x, v) @ sources
        along = np.sum(units * res_dot, axis=0)
        safe = np.where(norms > 0.0, norms, 1.0)
        units_dot = np.where(norms > 0.0, (res_dot - units * along) / safe, 0.0)
        grad_a = -weight * h * units @ sources.T
        grad_a_dot = -weight * h * units_dot @ sources.T
        j, r, q = x
        jd, rd, qd = v
        jr_dot = grad_a_dot @ q.T + grad_a @ qd.T
        return ProductArray(
            (jr_dot, -jr_dot, (jd - rd).T @ grad_a + (j - r).T @ grad_a_dot)
        )

    return FunctionOracle(value=value, egrad=egrad, ehess=ehess, name="prediction")


def entry_constraint(
    i: int,
    j: int,
    phi: Callable[[float], float],
    dphi: Callable[[float], float],
    ddphi: Callable[[float], float],
    name: str,
) -> FunctionOracle:
    """Oracle for ``phi(a_ij)`` where ``a_ij`` is an entry of ``(J - R) Q``."""

    def unit(x: ProductArray) -> np.ndarray:
        e = np.zeros_like(x[0])
        e[i, j] = 1.0
        return e

    def value(x: ProductArray) -> float:
        return phi(float(system_matrix(x)[i, j]))

    def egrad(x: ProductArray) -> ProductArray:
        a = float(system_matrix(x)[i, j])
        return dphi(a) * _pullback(x, unit(x))

    def ehess(x: ProductArray, v: ProductArray) -> ProductArray:
        a = float(system_matrix(x)[i, j])
        a_dot = float(_system_velocity(x, v)[i, j])
        e = unit(x)
        _, _, qd = v
        jd, rd, _ = v
        first_dot = ProductArray((e @ qd.T, -e @ qd.T, (jd - rd).T @ e))
        return ddphi(a) * a_dot * _pullback(x, e) + dphi(a) * first_dot

    return FunctionOracle(value=value, egrad=egrad, ehess=ehess, name=name)


def _lower_bound(i: int, j: int, bound: float) -> FunctionOracle:
    return entry_constraint(
        i, j, lambda a: a - bound, lambda a: 1.0, lambda a: 0.0, f"a[{i},{j}] - l"
    )


def _upper_bound(i: int, j: int, bound: float) -> FunctionOracle:
    return entry_constraint(
        i, j, lambda a: bound - a, lambda a: -1.0, lambda a: 0.0, f"u - a[{i},{j}]"
    )


def _ring(i: int, j: int, centre: float, radius: float) -> FunctionOracle:
    return entry_constraint(
        i,
        j,
        lambda a: (a - centre) ** 2 - radius**2,
        lambda a: 2.0 * (a - centre),
        lambda a: 2.0,
        f"ring a[{i},{j}]",
    )


def _simulate(
    a_true: np.ndarray, spec: StableLinSysSpec, rng: np.random.Generator
) -> np.ndarray:
    n = spec.n
    x0 = rng.standard_normal(n)
    x0 = np.sqrt(n) * x0 / np.linalg.norm(x0)
    states = np.empty((n, spec.n_obs + 1))
    states[:, 0] = x0
    transition = np.eye(n) + spec.h * a_true
    for step in range(spec.n_obs):
        noise = spec.noise_sigma * rng.standard_normal(n)
        states[:, step + 1] = transition @ states[:, step] + noise
    return states


def build_stable_linsys(spec: StableLinSysSpec | None = None) -> StableLinSysData:
    """Generate data from a random stable system and build the problem.

    Every random draw comes from one generator seeded with ``spec.seed``.

    Raises
    ------
    FeasibilityFailureError
        If the true system does not strictly satisfy the generated
        constraints.
    """
    spec = spec or StableLinSysSpec()
    rng = np.random.default_rng(spec.seed)
    n = spec.n

    g = rng.standard_normal((n, n))
    j_true = 0.5 * (g - g.T)
    b = rng.standard_normal((n, n))
    r_true = b @ b.T + 0.1 * np.eye(n)
    c = rng.standard_normal((n, n))
    q_true = c @ c.T + 0.1 * np.eye(n)
    truth = ProductArray((j_true, r_true, q_true))
    a_true = system_matrix(truth)
    states = _simulate(a_true, spec, rng)

    size1 = int(np.floor(spec.frac1 * n * n))
    size2 = int(np.floor(spec.frac2 * n * n))
    order = rng.permutation(n * n)
    ring_set = {divmod(int(p), n) for p in order[size1 : size1 + size2]}
    chosen = sorted({divmod(int(p), n) for p in order[: size1 + size2]})
    ring_indices = tuple(sorted(ring_set))
    if chosen:
        entries = np.array([a_true[ij] for ij in chosen])
        lower = float(entries.min()) - spec.bound_margin
        upper = float(entries.max()) + spec.bound_margin
    else:
        lower, upper = -np.inf, np.inf
    signs = rng.choice([-1.0, 1.0], size=len(ring_indices))
    centres = {
        ij: float(a_true[ij] + sign * 2.0 * spec.ring_radius)
        for ij, sign in zip(ring_indices, signs, strict=True)
    }

    constraints = []
    for i, j in chosen:
        constraints.append(_lower_bound(i, j, lower))
        constraints.append(_upper_bound(i, j, upper))
    constraints.extend(
        _ring(i, j, centres[(i, j)], spec.ring_radius) for i, j in ring_indices
    )
    manifold = Product(
        [SkewSymmetric(n), SymmetricPositiveDefinite(n), SymmetricPositiveDefinite(n)]
    )
    problem = RicoProblem(
        manifold,
        prediction_error_oracle(states, spec.h),
        constraints,
        name="stable-linsys",
    )
    if not problem.strict_feasible(truth):
        msg = "The generating system violates its own constraints"
        raise FeasibilityFailureError(msg)
    logger.debug(
        "Stable linsys: %d box entries, %d ring entries, bounds [%.3f, %.3f]",
        len(chosen),
        len(ring_indices),
        lower,
        upper,
    )
    return StableLinSysData(
        problem=problem,
        truth=truth,
        states=states,
        box_indices=tuple(chosen),
        ring_indices=ring_indices,
        lower=lower,
        upper=upper,
        ring_centres=centres,
    )
