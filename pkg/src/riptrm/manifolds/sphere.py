"""Unit sphere in ``R^n`` with the induced metric and the projective retraction."""

from __future__ import annotations

from typing import Any

import numpy as np

from riptrm.linalg.dense import null_space_basis
from riptrm.manifolds.base import Manifold, Point, Seed, Tangent, as_generator


class Sphere(Manifold):
    """The sphere ``{x in R^n : ||x|| = 1}`` of dimension ``n - 1``."""

    def __init__(self, n: int) -> None:
        self._n = int(n)
        super().__init__(name=f"Sphere({self._n})", dim=self._n - 1, scale=np.pi)

    def ambient_shape(self) -> tuple[int]:
        return (self._n,)

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        u = self._check_shape(u, "u")
        v = self._check_shape(v, "v")
        return float(u @ v)

    def retract(self, x: Point, v: Tangent) -> Point:
        # Metric projection of x + v, hence second order.
        y = self._check_shape(x, "x") + self._check_shape(v, "v")
        y = y / np.linalg.norm(y)
        self.check_point(y)
        return y

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        x = self._check_shape(x, "x")
        a = self._check_shape(a, "ambient vector")
        return a - (x @ a) * x

    def tangent_basis(self, x: Point) -> list[Tangent]:
        x = self._check_shape(x, "x")
        complement = null_space_basis(x[None, :], self._n)
        return [complement[:, i].copy() for i in range(complement.shape[1])]

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        return self.project_tangent(x, egrad)

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        x = self._check_shape(x, "x")
        egrad = self._check_shape(egrad, "egrad")
        v = self._check_shape(v, "v")
        return self.project_tangent(x, ehess_v) - (x @ egrad) * v

    def sample_point(self, seed: Seed = None) -> Point:
        y = as_generator(seed).standard_normal(self._n)
        return y / np.linalg.norm(y)

    def membership_defect(self, x: Point) -> float:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return float("inf")
        return abs(float(np.linalg.norm(x)) - 1.0)

    def point_to_json(self, x: Point) -> Any:
        return np.asarray(x, dtype=float).tolist()

    def point_from_json(self, data: Any) -> Point:
        return self._check_shape(np.array(data, dtype=float), "point")
