"""Result types for the dense linear-algebra kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    import numpy as np


@dataclass(frozen=True, eq=False)
class SymEigResult:
    """Full spectrum of a symmetric matrix.

    ``eigenvalues`` are sorted ascending and column ``i`` of ``eigenvectors``
    belongs to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue, ``+inf`` for an empty spectrum."""
        if self.eigenvalues.size == 0:
            return float("inf")
        return float(self.eigenvalues[0])


@dataclass(frozen=True, eq=False)
class ThinQR:
    """Thin QR factorisation ``A = Q R`` with a nonnegative diagonal of ``R``."""

    q: np.ndarray
    r: np.ndarray
