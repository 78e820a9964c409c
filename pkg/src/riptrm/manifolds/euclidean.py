"""Linear spaces: Euclidean space and skew-symmetric matrices."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from riptrm.manifolds.base import Manifold, Point, Seed, Tangent, as_generator


class Euclidean(Manifold):
    """Euclidean space of arrays with the given shape.

    Parameters
    ----------
    shape:
        Either an integer ``n`` (vectors in ``R^n``) or an array shape.
    """

    def __init__(self, *shape: int) -> None:
        if not shape:
            shape = (1,)
        self._shape = tuple(int(s) for s in shape)
        dim = math.prod(self._shape)
        label = "x".join(str(s) for s in self._shape)
        super().__init__(name=f"Euclidean({label})", dim=dim, scale=1.0)

    def ambient_shape(self) -> tuple[int, ...]:
        return self._shape

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        u = self._check_shape(u, "u")
        v = self._check_shape(v, "v")
        return float(np.sum(u * v))

    def retract(self, x: Point, v: Tangent) -> Point:
        return self._check_shape(x, "x") + self._check_shape(v, "v")

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        return self._check_shape(a, "ambient vector").copy()

    def tangent_basis(self, x: Point) -> list[Tangent]:
        eye = np.eye(self.dim)
        return [row.reshape(self._shape) for row in eye]

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        return self._check_shape(egrad, "egrad").copy()

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        return self._check_shape(ehess_v, "ehess_v").copy()

    def sample_point(self, seed: Seed = None) -> Point:
        return as_generator(seed).standard_normal(self._shape)

    def membership_defect(self, x: Point) -> float:
        return 0.0 if np.all(np.isfinite(x)) else float("inf")

    def point_to_json(self, x: Point) -> Any:
        return np.asarray(x, dtype=float).tolist()

    def point_from_json(self, data: Any) -> Point:
        return self._check_shape(np.array(data, dtype=float), "point")


class SkewSymmetric(Manifold):
    """Linear space of ``n x n`` skew-symmetric matrices, Frobenius metric."""

    def __init__(self, n: int) -> None:
        self._n = int(n)
        super().__init__(
            name=f"SkewSymmetric({self._n})",
            dim=self._n * (self._n - 1) // 2,
            scale=1.0,
        )

    def ambient_shape(self) -> tuple[int, int]:
        return (self._n, self._n)

    @staticmethod
    def _skew(a: np.ndarray) -> np.ndarray:
        return 0.5 * (a - a.T)

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        u = self._check_shape(u, "u")
        v = self._check_shape(v, "v")
        return float(np.sum(u * v))

    def retract(self, x: Point, v: Tangent) -> Point:
        return self._check_shape(x, "x") + self._check_shape(v, "v")

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        return self._skew(self._check_shape(a, "ambient vector"))

    def tangent_basis(self, x: Point) -> list[Tangent]:
        basis = []
        for i in range(self._n):
            for j in range(i + 1, self._n):
                e = np.zeros((self._n, self._n))
                e[i, j] = 1.0 / np.sqrt(2.0)
                e[j, i] = -1.0 / np.sqrt(2.0)
                basis.append(e)
        return basis

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        return self._skew(self._check_shape(egrad, "egrad"))

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        return self._skew(self._check_shape(ehess_v, "ehess_v"))

    def sample_point(self, seed: Seed = None) -> Point:
        return self._skew(as_generator(seed).standard_normal((self._n, self._n)))

    def membership_defect(self, x: Point) -> float:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return float("inf")
        return float(np.linalg.norm(x + x.T))

    def point_to_json(self, x: Point) -> Any:
        return np.asarray(x, dtype=float).tolist()

    def point_from_json(self, data: Any) -> Point:
        return self._check_shape(np.array(data, dtype=float), "point")
