"""Configuration, trace and result models for the interior-point solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

from riptrm.errors import InvalidInputError
from riptrm.problem.rico import DEFAULT_ACTIVE_TOL
from riptrm.trs.models import Subsolver
from riptrm.trs.solvers import TCG_KAPPA, TCG_THETA

if TYPE_CHECKING:
    import numpy as np

    from riptrm.problem.models import PrimalDualPair, ResidualBreakdown

SIGMA_FLOOR = 1e-30
MU_MIN = 1e-30


@dataclass(frozen=True)
class LinearForcing:
    """Forcing function ``mu -> coeff * mu``."""

    coeff: float = 1.0

    def __post_init__(self) -> None:
        if not self.coeff > 0.0:
            msg = f"Forcing coefficient must be positive, got {self.coeff}"
            raise InvalidInputError(msg)

    def __call__(self, mu: float) -> float:
        return self.coeff * mu


@dataclass(frozen=True)
class StoppingConditions:
    """Tolerances an inner iterate must meet before the barrier is reduced."""

    sigma_grad: LinearForcing = field(default_factory=LinearForcing)
    sigma_compl: LinearForcing = field(default_factory=lambda: LinearForcing(1e-3))
    sigma_sosp: LinearForcing = field(default_factory=LinearForcing)
    second_order: bool = False

    def compl_tolerance(self, mu: float) -> float:
        return max(self.sigma_compl(mu), SIGMA_FLOOR)


@dataclass(frozen=True)
class StoppingCheck:
    """Breakdown of a stopping test; ``min_eig`` is ``None`` when not evaluated."""

    grad_norm: float
    compl_norm: float
    feasible: bool
    duals_positive: bool
    min_eig: float | None
    satisfied: bool


@dataclass(frozen=True)
class InnerConfig:
    """Parameters of the inner trust-region iteration."""

    eta: float = 0.1
    contract_coeff: float = 0.25
    delta_max: float = 10.0
    clip_c_lo: float = 0.5
    clip_c_hi: float = 1e20
    subsolver: Subsolver = Subsolver.TCG
    max_inner_iters: int = 1000
    tcg_kappa: float = TCG_KAPPA
    tcg_theta: float = TCG_THETA
    exact_tol: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "subsolver", Subsolver(self.subsolver))
        if not 0.0 < self.eta < 0.25:
            msg = f"eta must lie in (0, 1/4), got {self.eta}"
            raise InvalidInputError(msg)
        if not 0.0 < self.contract_coeff < 1.0:
            msg = f"contract_coeff must lie in (0, 1), got {self.contract_coeff}"
            raise InvalidInputError(msg)
        if not 0.0 < self.clip_c_lo < 1.0 < self.clip_c_hi:
            msg = (
                "Clipping constants must satisfy 0 < c_lo < 1 < c_hi, "
                f"got {self.clip_c_lo} and {self.clip_c_hi}"
            )
            raise InvalidInputError(msg)
        if not self.delta_max > 0.0:
            msg = f"delta_max must be positive, got {self.delta_max}"
            raise InvalidInputError(msg)
        if self.max_inner_iters < 1:
            msg = f"max_inner_iters must be >= 1, got {self.max_inner_iters}"
            raise InvalidInputError(msg)


@dataclass(frozen=True)
class OuterConfig:
    """Parameters of the outer barrier loop.

    The barrier schedule is ``mu <- mu_factor * mu ** mu_power``. The initial
    radius defaults to an eighth of the manifold scale. Any of ``budget_s``,
    ``max_outer`` and ``target_residual`` may be ``None`` to disable it.
    """

    mu0: float = 0.1
    mu_factor: float = 0.5
    mu_power: float = 1.01
    delta_hat0: float | None = None
    delta_bar: float = 1e-15
    stopping: StoppingConditions = field(default_factory=StoppingConditions)
    inner: InnerConfig = field(default_factory=InnerConfig)
    budget_s: float | None = None
    max_outer: int | None = None
    target_residual: float | None = None
    mu_min: float = MU_MIN
    active_tol: float = DEFAULT_ACTIVE_TOL

    def __post_init__(self) -> None:
        if not self.mu0 > 0.0:
            msg = f"mu0 must be positive, got {self.mu0}"
            raise InvalidInputError(msg)
        if not (0.0 < self.mu_factor < 1.0 and self.mu_power >= 1.0):
            msg = (
                "The barrier schedule needs 0 < mu_factor < 1 and mu_power >= 1, "
                f"got {self.mu_factor} and {self.mu_power}"
            )
            raise InvalidInputError(msg)
        if not 0.0 < self.delta_bar <= self.inner.delta_max:
            msg = f"delta_bar must lie in (0, delta_max], got {self.delta_bar}"
            raise InvalidInputError(msg)
        if self.delta_hat0 is not None and not self.delta_hat0 > 0.0:
            msg = f"delta_hat0 must be positive, got {self.delta_hat0}"
            raise InvalidInputError(msg)

    def next_mu(self, mu: float) -> float:
        return self.mu_factor * mu**self.mu_power


class InnerEvent(StrEnum):
    """What happened in one inner iteration."""

    ACCEPTED = "accepted"
    REJECTED = "rejected"
    SHRINK = "shrink"
    CONVERGED = "converged"


class InnerStatus(StrEnum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    TIME_BUDGET = "time-budget"
    RADIUS_COLLAPSE = "radius-collapse"


class OuterStatus(StrEnum):
    TARGET_RESIDUAL = "target-residual"
    TIME_BUDGET = "time-budget"
    MAX_OUTER = "max-outer"
    MU_UNDERFLOW = "mu-underflow"


@dataclass(frozen=True, eq=False)
class InnerIterationRecord:
    """One inner iteration.

    ``delta`` is the radius the step was computed with. ``ared``, ``pred`` and
    ``rho`` are ``None`` when the retracted point was infeasible; otherwise
    ``ared`` and ``pred`` include the shift from
    :func:`riptrm.solver.inner.ratio_regularization`. ``merit``, ``f`` and
    ``residual`` describe the iterate carried forward.
    """

    outer_iter: int
    ell: int
    mu: float
    delta: float
    d_norm: float
    ared: float | None
    pred: float | None
    rho: float | None
    accepted: bool
    feasible_retraction: bool
    event: InnerEvent
    dual_raw: np.ndarray
    dual_clipped: np.ndarray | None
    merit: float
    f: float
    residual: ResidualBreakdown
    min_constraint: float | None
    min_dual: float | None
    clip_margin: float | None
    elapsed_s: float


@dataclass(frozen=True)
class OuterSummary:
    """State after an outer iteration; ``outer_iter == 0`` is the start point."""

    outer_iter: int
    mu: float
    delta_hat: float
    f: float
    merit: float
    residual: ResidualBreakdown
    min_eig_H: float
    second_order_measure: float
    inner_iters: int
    status: str
    elapsed_s: float


@dataclass
class SolverTrace:
    """Time-ordered inner records and outer summaries of one run."""

    events: list[InnerIterationRecord | OuterSummary] = field(default_factory=list)

    def append(self, event: InnerIterationRecord | OuterSummary) -> None:
        self.events.append(event)

    def extend(self, events: list[InnerIterationRecord]) -> None:
        self.events.extend(events)

    @property
    def inner_records(self) -> list[InnerIterationRecord]:
        return [e for e in self.events if isinstance(e, InnerIterationRecord)]

    @property
    def outer_summaries(self) -> list[OuterSummary]:
        return [e for e in self.events if isinstance(e, OuterSummary)]


@dataclass(frozen=True, eq=False)
class InnerResult:
    w: PrimalDualPair
    delta: float
    status: InnerStatus
    records: list[InnerIterationRecord]


@dataclass(frozen=True, eq=False)
class OuterResult:
    w: PrimalDualPair
    status: OuterStatus
    trace: SolverTrace
    outer_iters: int
    residual: ResidualBreakdown


class VirtualClock:
    """Deterministic clock advancing a fixed quantum on every reading."""

    def __init__(self, quantum: float = 1e-3) -> None:
        self._quantum = quantum
        self._now = 0.0

    def __call__(self) -> float:
        self._now += self._quantum
        return self._now
