"""Abstract manifold interface.

Points and tangent vectors are plain numpy arrays in the ambient coordinates of
each manifold (``ProductArray`` tuples for product manifolds). The base point
is always passed explicitly, so a tangent vector carries no reference to it.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.errors import InvalidInputError, ManifoldConsistencyError
from riptrm.manifolds.models import ManifoldDescriptor

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-10

# A point or tangent vector: an ndarray, or a ProductArray of them.
type Point = Any
type Tangent = Any
type Seed = int | np.random.Generator | None


def as_generator(seed: Seed) -> np.random.Generator:
    """Return a numpy ``Generator`` for an integer seed or pass one through."""
    return np.random.default_rng(seed)


class Manifold(ABC):
    """A Riemannian manifold embedded in (or a quotient of) a matrix space.

    Parameters
    ----------
    name:
        Short identifier used in logs and trace sidecars.
    dim:
        Intrinsic dimension.
    scale:
        Typical distance; the default initial trust-region radius is
        ``scale / 8``.
    """

    def __init__(self, name: str, dim: int, scale: float) -> None:
        self._name = name
        self._descriptor = ManifoldDescriptor(dim=dim, scale=scale)

    def __repr__(self) -> str:
        return self._name

    @property
    def name(self) -> str:
        return self._name

    @property
    def descriptor(self) -> ManifoldDescriptor:
        return self._descriptor

    @property
    def dim(self) -> int:
        return self._descriptor.dim

    @property
    def scale(self) -> float:
        return self._descriptor.scale

    @abstractmethod
    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        """Riemannian metric at ``x``."""

    @abstractmethod
    def retract(self, x: Point, v: Tangent) -> Point:
        """Second-order retraction ``R_x(v)``."""

    @abstractmethod
    def project_tangent(self, x: Point, a: Any) -> Tangent:
        """Project an ambient vector onto ``T_x M``."""

    @abstractmethod
    def tangent_basis(self, x: Point) -> list[Tangent]:
        """Orthonormal basis of ``T_x M`` with exactly ``dim`` elements."""

    @abstractmethod
    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        """Convert a Euclidean gradient to the Riemannian gradient."""

    @abstractmethod
    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        """Convert a Euclidean Hessian-vector product to the Riemannian one."""

    @abstractmethod
    def sample_point(self, seed: Seed = None) -> Point:
        """Deterministic (under ``seed``) random point of the manifold."""

    @abstractmethod
    def membership_defect(self, x: Point) -> float:
        """Distance to the membership conditions; ``+inf`` if hopeless."""

    @abstractmethod
    def ambient_shape(self) -> Any:
        """Shape of the ambient representation."""

    @abstractmethod
    def point_to_json(self, x: Point) -> Any:
        """JSON-serialisable form of a point."""

    @abstractmethod
    def point_from_json(self, data: Any) -> Point:
        """Inverse of :meth:`point_to_json`."""

    def norm(self, x: Point, v: Tangent) -> float:
        """Norm induced by the metric at ``x``.

        ``v`` is divided by its largest entry before the inner product is taken.
        """
        scale = _max_abs(v)
        if scale == 0.0 or not np.isfinite(scale):
            return scale
        u = v / scale
        return scale * float(np.sqrt(max(self.inner(x, u, u), 0.0)))

    def zero_vector(self, x: Point) -> Tangent:
        """Zero tangent vector at ``x``."""
        return 0.0 * x

    def sample_tangent(self, x: Point, seed: Seed = None) -> Tangent:
        """Deterministic (under ``seed``) random tangent vector at ``x``."""
        rng = as_generator(seed)
        return self.project_tangent(x, rng.standard_normal(self.ambient_shape()))

    def combine(
        self, x: Point, basis: Sequence[Tangent], coeffs: np.ndarray
    ) -> Tangent:
        """Linear combination ``sum_i coeffs[i] * basis[i]`` at ``x``."""
        result = self.zero_vector(x)
        for coeff, vector in zip(coeffs, basis, strict=True):
            result = result + float(coeff) * vector
        return result

    def coordinates(self, x: Point, basis: Sequence[Tangent], v: Tangent) -> np.ndarray:
        """Coordinates of ``v`` in an orthonormal ``basis``."""
        return np.array([self.inner(x, b, v) for b in basis], dtype=float)

    def operator_matrix(
        self,
        x: Point,
        basis: Sequence[Tangent],
        apply: Callable[[Tangent], Tangent],
    ) -> np.ndarray:
        """Symmetrised matrix ``M_ij = <apply(b_i), b_j>`` of a self-adjoint map."""
        images = [apply(b) for b in basis]
        d = len(basis)
        matrix = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                matrix[i, j] = self.inner(x, images[i], basis[j])
                matrix[j, i] = self.inner(x, basis[i], images[j])
        return 0.5 * (matrix + matrix.T)

    def check_point(self, x: Point, tol: float = MEMBERSHIP_TOL) -> None:
        """Raise ``ManifoldConsistencyError`` if ``x`` fails the membership test."""
        defect = self.membership_defect(x)
        if not defect <= tol:
            msg = f"Point is not on {self.name}: membership defect {defect:.3e}"
            raise ManifoldConsistencyError(msg)

    def _check_shape(self, a: np.ndarray, what: str) -> np.ndarray:
        array = np.asarray(a, dtype=float)
        if array.shape != self.ambient_shape():
            msg = (
                f"{what} has shape {array.shape}, expected {self.ambient_shape()} "
                f"on {self.name}"
            )
            raise InvalidInputError(msg)
        return array


def _max_abs(v: Tangent) -> float:
    if isinstance(v, tuple):
        return max((_max_abs(part) for part in v), default=0.0)
    array = np.asarray(v)
    return float(np.max(np.abs(array))) if array.size else 0.0
