"""Descriptors shared by every manifold."""

from __future__ import annotations

from dataclasses import dataclass

from riptrm.errors import InvalidInputError


@dataclass(frozen=True)
class ManifoldDescriptor:
    """Intrinsic dimension and typical-distance scale of a manifold.

    The scale feeds the default initial trust-region radius ``scale / 8``.
    """

    dim: int
    scale: float

    def __post_init__(self) -> None:
        if self.dim < 1:
            msg = f"Manifold dimension must be >= 1, got {self.dim}"
            raise InvalidInputError(msg)
        if not self.scale > 0:
            msg = f"Manifold scale must be positive, got {self.scale}"
            raise InvalidInputError(msg)
