"""Lagrangian, barrier and residual quantities of a constrained manifold problem.

The problem is ``min f(x)`` over ``x`` in a manifold subject to ``g_i(x) >= 0``.
The constraint Jacobian is never formed: every quantity that needs it sums
over the Riemannian gradients of the individual constraints.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.errors import InvalidInputError, InvalidStateError, NotStrictlyFeasibleError
from riptrm.linalg.dense import min_eigenvalue, null_space_basis, symmetrize
from riptrm.problem.models import (
    FunctionOracle,
    PrimalDualPair,
    ResidualBreakdown,
    check_multiplier_count,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from riptrm.manifolds.base import Manifold, Point, Tangent

logger = logging.getLogger(__name__)

DEFAULT_ACTIVE_TOL = 1e-6
_DIVISION_GUARD = 1e-300


class RicoProblem:
    """Objective and inequality constraints on a common manifold.

    Parameters
    ----------
    manifold:
        The search space.
    objective:
        Oracle for ``f``.
    constraints:
        Ordered oracles for ``g_1, ..., g_m`` (possibly empty).
    name:
        Label used in logs and trace sidecars.
    """

    def __init__(
        self,
        manifold: Manifold,
        objective: FunctionOracle,
        constraints: Sequence[FunctionOracle] = (),
        name: str = "problem",
    ) -> None:
        self._manifold = manifold
        self._objective = objective
        self._constraints = tuple(constraints)
        self._name = name

    def __repr__(self) -> str:
        return f"RicoProblem({self._name!r}, {self._manifold!r}, m={self.m})"

    @property
    def manifold(self) -> Manifold:
        return self._manifold

    @property
    def objective(self) -> FunctionOracle:
        return self._objective

    @property
    def constraints(self) -> tuple[FunctionOracle, ...]:
        return self._constraints

    @property
    def name(self) -> str:
        return self._name

    @property
    def m(self) -> int:
        """Number of inequality constraints."""
        return len(self._constraints)

    # ------------------------------------------------------------------
    # Function values and gradients
    # ------------------------------------------------------------------

    def objective_value(self, x: Point) -> float:
        return float(self._objective.value(x))

    def constraint_values(self, x: Point) -> np.ndarray:
        """Vector ``g(x)``; empty when there are no constraints."""
        return np.array([float(g.value(x)) for g in self._constraints], dtype=float)

    def constraint_rgrads(self, x: Point) -> list[Tangent]:
        """Riemannian gradients of the constraints, in constraint order."""
        return [self._manifold.egrad_to_rgrad(x, g.egrad(x)) for g in self._constraints]

    def strict_feasible(self, x: Point) -> bool:
        """True iff every ``g_i(x) > 0``; no tolerance is applied."""
        return bool(np.all(self.constraint_values(x) > 0.0))

    def _lagrangian_egrad(self, x: Point, lam: np.ndarray) -> Any:
        egrad = self._objective.egrad(x)
        for lam_i, g in zip(lam, self._constraints, strict=True):
            if lam_i != 0.0:
                egrad = egrad - float(lam_i) * g.egrad(x)
        return egrad

    def _lagrangian_ehess(self, x: Point, lam: np.ndarray, v: Tangent) -> Any:
        ehess_v = self._objective.ehess(x, v)
        for lam_i, g in zip(lam, self._constraints, strict=True):
            if lam_i != 0.0:
                ehess_v = ehess_v - float(lam_i) * g.ehess(x, v)
        return ehess_v

    def grad_lagrangian(self, w: PrimalDualPair) -> Tangent:
        """Riemannian gradient of ``L(x, lam) = f(x) - sum_i lam_i g_i(x)`` in ``x``."""
        check_multiplier_count(w, self.m)
        return self._manifold.egrad_to_rgrad(w.x, self._lagrangian_egrad(w.x, w.lam))

    def hess_lagrangian_apply(self, w: PrimalDualPair, v: Tangent) -> Tangent:
        """Riemannian Hessian of the Lagrangian in ``x`` applied to ``v``."""
        check_multiplier_count(w, self.m)
        return self._manifold.ehess_to_rhess(
            w.x,
            self._lagrangian_egrad(w.x, w.lam),
            self._lagrangian_ehess(w.x, w.lam, v),
            v,
        )

    # ------------------------------------------------------------------
    # Barrier quantities
    # ------------------------------------------------------------------

    def _feasible_constraint_values(self, x: Point) -> np.ndarray:
        g = self.constraint_values(x)
        if np.any(g <= 0.0) or np.any(np.abs(g) < _DIVISION_GUARD):
            worst = int(np.argmin(g))
            msg = f"Point is not strictly feasible: g[{worst}] = {g[worst]!r}"
            raise NotStrictlyFeasibleError(msg)
        return g

    @staticmethod
    def _check_mu(mu: float) -> float:
        mu = float(mu)
        if not mu >= 0.0:
            msg = f"Barrier parameter must be nonnegative, got {mu}"
            raise InvalidInputError(msg)
        return mu

    def _check_positive_duals(self, w: PrimalDualPair) -> None:
        check_multiplier_count(w, self.m)
        if np.any(w.lam <= 0.0):
            msg = f"Multipliers must be positive, min is {float(np.min(w.lam))!r}"
            raise InvalidStateError(msg)

    def barrier_gradient(self, x: Point, mu: float) -> Tangent:
        """Riemannian gradient of the merit function ``f - mu * sum log g_i``.

        Raises
        ------
        NotStrictlyFeasibleError
            If ``mu > 0`` and some ``g_i(x) <= 0``.
        """
        mu = self._check_mu(mu)
        if mu == 0.0 or self.m == 0:
            return self._manifold.egrad_to_rgrad(x, self._objective.egrad(x))
        g = self._feasible_constraint_values(x)
        return self._manifold.egrad_to_rgrad(x, self._lagrangian_egrad(x, mu / g))

    def condensed_operator(self, w: PrimalDualPair) -> Callable[[Tangent], Tangent]:
        """Return ``v -> Hess L(w)[v] + sum_i (lam_i / g_i) <grad g_i, v> grad g_i``.

        Everything independent of ``v`` is evaluated once, so the returned
        callable is cheap to apply repeatedly inside a subproblem solver.

        Raises
        ------
        InvalidStateError
            If ``x`` is not strictly feasible or some multiplier is nonpositive.
        """
        self._check_positive_duals(w)
        x, lam = w.x, w.lam
        manifold = self._manifold
        g = self._feasible_constraint_values(x) if self.m else np.zeros(0)
        weights = lam / g if self.m else np.zeros(0)
        rgrads = self.constraint_rgrads(x)
        egrad_lag = self._lagrangian_egrad(x, lam)

        def apply(v: Tangent) -> Tangent:
            result = manifold.ehess_to_rhess(
                x, egrad_lag, self._lagrangian_ehess(x, lam, v), v
            )
            for weight, grad_g in zip(weights, rgrads, strict=True):
                result = result + float(weight) * manifold.inner(x, grad_g, v) * grad_g
            return result

        return apply

    def condensed_apply(self, w: PrimalDualPair, v: Tangent) -> Tangent:
        """Apply the condensed Newton operator ``H(w)`` to ``v``."""
        return self.condensed_operator(w)(v)

    def barrier_kkt_field(
        self, w: PrimalDualPair, mu: float
    ) -> tuple[Tangent, np.ndarray]:
        """The pair ``(grad_x L(w), lam * g(x) - mu)``."""
        mu = self._check_mu(mu)
        return self.grad_lagrangian(w), w.lam * self.constraint_values(w.x) - mu

    def merit(self, x: Point, mu: float) -> float:
        """Log-barrier merit ``f(x) - mu * sum_i log g_i(x)``.

        Raises
        ------
        NotStrictlyFeasibleError
            If some ``g_i(x) <= 0``.
        """
        mu = self._check_mu(mu)
        value = self.objective_value(x)
        if self.m == 0:
            return value
        g = self._feasible_constraint_values(x)
        return value - mu * float(np.sum(np.log(g)))

    # ------------------------------------------------------------------
    # Stationarity measures
    # ------------------------------------------------------------------

    def kkt_residual(self, w: PrimalDualPair) -> ResidualBreakdown:
        """KKT residual including the manifold-violation term.

        Works at infeasible points. When the manifold violation is infinite
        the gradient term is not trusted and reported as ``+inf`` if it cannot
        be evaluated.
        """
        check_multiplier_count(w, self.m)
        manvio = float(self._manifold.membership_defect(w.x))
        g = self.constraint_values(w.x)
        try:
            with np.errstate(all="ignore"):
                grad_lag_norm = self._manifold.norm(w.x, self.grad_lagrangian(w))
        except (ValueError, np.linalg.LinAlgError):
            if not math.isinf(manvio):
                raise
            grad_lag_norm = math.inf
        return ResidualBreakdown.from_components(
            grad_lag_norm=float(grad_lag_norm),
            dual_neg=float(np.linalg.norm(np.minimum(0.0, w.lam))),
            primal_neg=float(np.linalg.norm(np.minimum(0.0, g))),
            compl=float(np.linalg.norm(w.lam * g)),
            manvio=manvio,
        )

    def hess_lagrangian_matrix(
        self, w: PrimalDualPair, basis: Sequence[Tangent] | None = None
    ) -> np.ndarray:
        """Matrix of ``Hess_x L(w)`` in an orthonormal tangent basis."""
        if basis is None:
            basis = self._manifold.tangent_basis(w.x)
        return self._manifold.operator_matrix(
            w.x, basis, lambda v: self.hess_lagrangian_apply(w, v)
        )

    def second_order_measure(
        self, w: PrimalDualPair, active_tol: float = DEFAULT_ACTIVE_TOL
    ) -> float:
        """Smallest eigenvalue of ``Hess_x L(w)`` on the weak critical cone.

        Constraints with ``g_i(x) < active_tol`` are active; the cone is the
        set of tangent vectors orthogonal to their gradients. Returns ``+inf``
        when the cone is trivial.
        """
        check_multiplier_count(w, self.m)
        manifold = self._manifold
        basis = manifold.tangent_basis(w.x)
        hess = self.hess_lagrangian_matrix(w, basis)
        g = self.constraint_values(w.x)
        active = [
            manifold.coordinates(w.x, basis, grad_g)
            for gi, grad_g in zip(g, self.constraint_rgrads(w.x), strict=True)
            if gi < active_tol
        ]
        cone = null_space_basis(np.array(active), len(basis))
        if cone.shape[1] == 0:
            return math.inf
        logger.debug(
            "Critical cone of dimension %d (%d active constraints)",
            cone.shape[1],
            len(active),
        )
        return min_eigenvalue(symmetrize(cone.T @ hess @ cone))
