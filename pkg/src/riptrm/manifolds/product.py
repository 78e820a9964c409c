"""Cartesian products of manifolds with the product metric."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np

from riptrm.errors import InvalidInputError
from riptrm.manifolds.base import Manifold, Point, Seed, Tangent, as_generator

if TYPE_CHECKING:
    from collections.abc import Sequence


class ProductArray(tuple):
    """Tuple of factor arrays supporting vector-space arithmetic.

    ``+`` and ``-`` act componentwise and ``*`` / ``/`` only by scalars, so
    solver code can treat product points and tangents like plain arrays.
    """

    __slots__ = ()

    # Make numpy scalars defer to __rmul__ instead of broadcasting.
    __array_ufunc__ = None

    def __new__(cls, parts: Any) -> ProductArray:
        return super().__new__(cls, parts)

    def _zip(self, other: Any) -> zip:
        if not isinstance(other, ProductArray) or len(other) != len(self):
            msg = "ProductArray arithmetic needs a ProductArray with matching factors"
            raise InvalidInputError(msg)
        return zip(self, other, strict=True)

    def __add__(self, other: Any) -> ProductArray:  # type: ignore[override]
        return ProductArray(a + b for a, b in self._zip(other))

    def __sub__(self, other: Any) -> ProductArray:
        return ProductArray(a - b for a, b in self._zip(other))

    def __mul__(self, scalar: Any) -> ProductArray:  # type: ignore[override]
        return ProductArray(float(scalar) * a for a in self)

    __rmul__ = __mul__  # type: ignore[assignment]

    def __truediv__(self, scalar: Any) -> ProductArray:
        return ProductArray(a / float(scalar) for a in self)

    def __neg__(self) -> ProductArray:
        return ProductArray(-a for a in self)

    def copy(self) -> ProductArray:
        return ProductArray(np.array(a, dtype=float) for a in self)


class Product(Manifold):
    """Product ``M_1 x ... x M_p``.

    Inner products, retractions and conversions act factor by factor. The
    tangent basis concatenates the factor bases, each padded with zeros in
    the other slots.
    """

    def __init__(self, factors: Sequence[Manifold]) -> None:
        self._factors = tuple(factors)
        if not self._factors:
            msg = "Product needs at least one factor"
            raise InvalidInputError(msg)
        name = "x".join(f.name for f in self._factors)
        super().__init__(
            name=f"Product({name})",
            dim=sum(f.dim for f in self._factors),
            scale=float(np.sqrt(sum(f.scale**2 for f in self._factors))),
        )

    @property
    def factors(self) -> tuple[Manifold, ...]:
        return self._factors

    def ambient_shape(self) -> tuple[Any, ...]:
        return tuple(f.ambient_shape() for f in self._factors)

    def _split(self, a: Any, what: str) -> ProductArray:
        if not isinstance(a, tuple) or len(a) != len(self._factors):
            msg = f"{what} must be a {len(self._factors)}-factor tuple on {self.name}"
            raise InvalidInputError(msg)
        return a if isinstance(a, ProductArray) else ProductArray(a)

    def inner(self, x: Point, u: Tangent, v: Tangent) -> float:
        x, u, v = self._split(x, "x"), self._split(u, "u"), self._split(v, "v")
        return float(
            sum(
                f.inner(xi, ui, vi)
                for f, xi, ui, vi in zip(self._factors, x, u, v, strict=True)
            )
        )

    def retract(self, x: Point, v: Tangent) -> Point:
        x, v = self._split(x, "x"), self._split(v, "v")
        return ProductArray(
            f.retract(xi, vi) for f, xi, vi in zip(self._factors, x, v, strict=True)
        )

    def project_tangent(self, x: Point, a: Any) -> Tangent:
        x, a = self._split(x, "x"), self._split(a, "ambient vector")
        return ProductArray(
            f.project_tangent(xi, ai)
            for f, xi, ai in zip(self._factors, x, a, strict=True)
        )

    def tangent_basis(self, x: Point) -> list[Tangent]:
        x = self._split(x, "x")
        zeros = [f.zero_vector(xi) for f, xi in zip(self._factors, x, strict=True)]
        basis = []
        for slot, (f, xi) in enumerate(zip(self._factors, x, strict=True)):
            for b in f.tangent_basis(xi):
                parts = list(zeros)
                parts[slot] = b
                basis.append(ProductArray(parts))
        return basis

    def egrad_to_rgrad(self, x: Point, egrad: Any) -> Tangent:
        x, egrad = self._split(x, "x"), self._split(egrad, "egrad")
        return ProductArray(
            f.egrad_to_rgrad(xi, gi)
            for f, xi, gi in zip(self._factors, x, egrad, strict=True)
        )

    def ehess_to_rhess(self, x: Point, egrad: Any, ehess_v: Any, v: Tangent) -> Tangent:
        x = self._split(x, "x")
        egrad = self._split(egrad, "egrad")
        ehess_v = self._split(ehess_v, "ehess_v")
        v = self._split(v, "v")
        return ProductArray(
            f.ehess_to_rhess(xi, gi, hi, vi)
            for f, xi, gi, hi, vi in zip(
                self._factors, x, egrad, ehess_v, v, strict=True
            )
        )

    def sample_point(self, seed: Seed = None) -> Point:
        rng = as_generator(seed)
        return ProductArray(f.sample_point(rng) for f in self._factors)

    def sample_tangent(self, x: Point, seed: Seed = None) -> Tangent:
        rng = as_generator(seed)
        x = self._split(x, "x")
        return ProductArray(
            f.sample_tangent(xi, rng) for f, xi in zip(self._factors, x, strict=True)
        )

    def membership_defect(self, x: Point) -> float:
        x = self._split(x, "x")
        return float(
            sum(
                f.membership_defect(xi)
                for f, xi in zip(self._factors, x, strict=True)
            )
        )

    def point_to_json(self, x: Point) -> Any:
        x = self._split(x, "x")
        return [f.point_to_json(xi) for f, xi in zip(self._factors, x, strict=True)]

    def point_from_json(self, data: Any) -> Point:
        if not isinstance(data, list) or len(data) != len(self._factors):
            msg = f"Expected a {len(self._factors)}-element list for {self.name}"
            raise InvalidInputError(msg)
        return ProductArray(
            f.point_from_json(item) for f, item in zip(self._factors, data, strict=True)
        )
