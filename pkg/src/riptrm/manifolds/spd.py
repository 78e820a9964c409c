"""Symmetric positive definite matrices with the affine-invariant metric."""

from __future__ import annotations

from typing import Any

import numpy as np
import scipy.linalg

from riptrm.linalg.dense import symmetrize
from riptrm.manifolds.base import Manifold, Point, Seed, Tangent, as_generator


def _eig_function(x: np.ndarray, fn: Any) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigenbasis."""
    w, q = scipy.linalg.eigh(symmetrize(x))
    return (q * fn(w)) @ q.T


class SymmetricPositiveDefinite(Manifold):
    """Manifold of ``n x n`` SPD matrices.

    The metric is ``<U, V>_X = trace(X^{-1} U X^{-1} V)`` and the retraction
    is the exponential map
    ``X^{1/2} expm(X^{-1/2} V X^{-1/2}) X^{1/2}``.
    """

    def __init__(self, n: int) -> None:
        self._n = int(n)
        super().__init__(
            name=f"SymmetricPositiveDefinite({self._n})",
            dim=self._n * (self._n + 1) // 2,
            scale=1.0,
        )

    def ambient_shape(self) -> tuple[int, int]:
        return (self._n, self._n)

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        x = self._check_shape(x, "x")
        u = self._check_shape(u, "u")
        v = self._check_shape(v, "v")
        x_inv_u = scipy.linalg.solve(x, u, assume_a="pos")
        x_inv_v = scipy.linalg.solve(x, v, assume_a="pos")
        return float(np.sum(x_inv_u * x_inv_v.T))

    def retract(self, x: Point, v: Tangent) -> Point:
        x = self._check_shape(x, "x")
        v = self._check_shape(v, "v")
        x_half = _eig_function(x, np.sqrt)
        x_half_inv = _eig_function(x, lambda w: 1.0 / np.sqrt(w))
        inner = _eig_function(x_half_inv @ v @ x_half_inv, np.exp)
        y = symmetrize(x_half @ inner @ x_half)
        self.check_point(y)
        return y

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        return symmetrize(self._check_shape(a, "ambient vector"))

    def tangent_basis(self, x: Point) -> list[Tangent]:
        x_half = _eig_function(self._check_shape(x, "x"), np.sqrt)
        basis = []
        for i in range(self._n):
            for j in range(i, self._n):
                s = np.zeros((self._n, self._n))
                if i == j:
                    s[i, i] = 1.0
                else:
                    s[i, j] = s[j, i] = 1.0 / np.sqrt(2.0)
                basis.append(symmetrize(x_half @ s @ x_half))
        return basis

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        x = self._check_shape(x, "x")
        return symmetrize(x @ symmetrize(self._check_shape(egrad, "egrad")) @ x)

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        x = self._check_shape(x, "x")
        egrad = symmetrize(self._check_shape(egrad, "egrad"))
        ehess_v = symmetrize(self._check_shape(ehess_v, "ehess_v"))
        v = self._check_shape(v, "v")
        return symmetrize(x @ ehess_v @ x) + symmetrize(v @ egrad @ x)

    def sample_point(self, seed: Seed = None) -> Point:
        b = as_generator(seed).standard_normal((self._n, self._n))
        return symmetrize(b @ b.T / self._n + 0.1 * np.eye(self._n))

    def membership_defect(self, x: Point) -> float:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return float("inf")
        asymmetry = float(np.linalg.norm(x - x.T))
        if np.linalg.eigvalsh(symmetrize(x))[0] <= 0.0:
            return float("inf")
        return asymmetry

    def point_to_json(self, x: Point) -> Any:
        return np.asarray(x, dtype=float).tolist()

    def point_from_json(self, data: Any) -> Point:
        return self._check_shape(np.array(data, dtype=float), "point")
