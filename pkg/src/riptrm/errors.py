"""Exception hierarchy shared by every riptrm module."""

from __future__ import annotations


class RiptrmError(Exception):
    """Base class for all errors raised by riptrm."""


class InvalidInputError(RiptrmError, ValueError):
    """An argument has the wrong shape, structure or value."""


class InvalidStateError(RiptrmError, ValueError):
    """An iterate violates a precondition, e.g. a nonpositive dual variable."""


class NotPositiveDefiniteError(RiptrmError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class RankDeficientError(RiptrmError, ValueError):
    """A matrix expected to have full column rank does not."""


class NotStrictlyFeasibleError(InvalidStateError):
    """A barrier quantity was requested at a point with some g_i(x) <= 0."""


class ManifoldConsistencyError(RiptrmError, RuntimeError):
    """A computed point failed the manifold membership test."""


class SolverFailureError(RiptrmError, RuntimeError):
    """A solver produced a result that violates its own contract."""


class FeasibilityFailureError(RiptrmError, RuntimeError):
    """No strictly feasible point was found within the budget."""


class TraceFormatError(RiptrmError, ValueError):
    """A trace, sidecar or run-config file could not be parsed."""
