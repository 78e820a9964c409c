"""Grassmann manifold represented by orthonormal ``n x k`` matrices.

The quotient is handled implicitly: tangent vectors are horizontal lifts
``V`` with ``X^T V = 0`` and the metric is ``trace(U^T V)``.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from riptrm.errors import InvalidInputError
from riptrm.linalg.dense import null_space_basis, qr_thin
from riptrm.manifolds.base import Manifold, Point, Seed, Tangent, as_generator


class Grassmann(Manifold):
    """Grassmann manifold ``Gr(n, k)`` of ``k``-planes in ``R^n``.

    The retraction is the polar (metric projection) retraction
    ``(X + V)(I + V^T V)^{-1/2}``, which is second order.
    """

    def __init__(self, n: int, k: int) -> None:
        self._n = int(n)
        self._k = int(k)
        if not self._n > self._k >= 1:
            msg = f"Grassmann needs n > k >= 1, got n={self._n}, k={self._k}"
            raise InvalidInputError(msg)
        super().__init__(
            name=f"Grassmann({self._n},{self._k})",
            dim=self._k * (self._n - self._k),
            scale=float(np.pi * np.sqrt(self._k)),
        )

    def ambient_shape(self) -> tuple[int, int]:
        return (self._n, self._k)

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        u = self._check_shape(u, "u")
        v = self._check_shape(v, "v")
        return float(np.sum(u * v))

    def retract(self, x: Point, v: Tangent) -> Point:
        y = self._check_shape(x, "x") + self._check_shape(v, "v")
        u, _, vt = np.linalg.svd(y, full_matrices=False)
        y = u @ vt
        self.check_point(y)
        return y

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        x = self._check_shape(x, "x")
        a = self._check_shape(a, "ambient vector")
        return a - x @ (x.T @ a)

    def tangent_basis(self, x: Point) -> list[Tangent]:
        x = self._check_shape(x, "x")
        complement = null_space_basis(x.T, self._n)
        basis = []
        for i in range(complement.shape[1]):
            for j in range(self._k):
                e = np.zeros((self._n, self._k))
                e[:, j] = complement[:, i]
                basis.append(e)
        return basis

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        return self.project_tangent(x, egrad)

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        x = self._check_shape(x, "x")
        egrad = self._check_shape(egrad, "egrad")
        v = self._check_shape(v, "v")
        return self.project_tangent(x, ehess_v) - v @ (x.T @ egrad)

    def sample_point(self, seed: Seed = None) -> Point:
        a = as_generator(seed).standard_normal((self._n, self._k))
        return qr_thin(a).q

    def membership_defect(self, x: Point) -> float:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return float("inf")
        return float(np.linalg.norm(x.T @ x - np.eye(self._k)))

    def point_to_json(self, x: Point) -> Any:
        return np.asarray(x, dtype=float).tolist()

    def point_from_json(self, data: Any) -> Point:
        return self._check_shape(np.array(data, dtype=float), "point")
