"""Run settings for the command line: defaults, a config file and flag overrides.

The config file is flat ``key = value`` text with ``#`` comments, read with
``dotenv_values``. Every key is optional; unknown keys and values that do not
parse are usage errors.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, fields, replace
from enum import StrEnum
from typing import TYPE_CHECKING, Any

from dotenv import dotenv_values

from riptrm.errors import InvalidInputError
from riptrm.problem.rico import DEFAULT_ACTIVE_TOL
from riptrm.solver.models import (
    InnerConfig,
    OuterConfig,
    StoppingConditions,
    VirtualClock,
)
from riptrm.trs.models import Subsolver

if TYPE_CHECKING:
    from collections.abc import Callable, Mapping
    from pathlib import Path

logger = logging.getLogger(__name__)


class ProblemName(StrEnum):
    ROSENBROCK_GRASSMANN = "rosenbrock-grassmann"
    STABLE_LINSYS = "stable-linsys"
    ANALYTIC_1D = "analytic-1d"


class SecondOrder(StrEnum):
    AUTO = "auto"
    ON = "on"
    OFF = "off"


class ClockKind(StrEnum):
    WALL = "wall"
    VIRTUAL = "virtual"


_ENUMS: dict[str, type[StrEnum]] = {
    "problem": ProblemName,
    "subsolver": Subsolver,
    "second_order": SecondOrder,
    "clock": ClockKind,
}
_NONE_WORDS = frozenset({"", "none", "null"})


@dataclass(frozen=True)
class RunSettings:
    """Everything that determines a benchmark run.

    ``budget_s``, ``max_outer``, ``target_residual``, ``delta_hat0`` and
    ``exact_tol`` accept ``none`` to disable or defer to the solver default.
    """

    problem: ProblemName = ProblemName.ANALYTIC_1D
    subsolver: Subsolver = Subsolver.TCG
    second_order: SecondOrder = SecondOrder.AUTO
    seed: int = 0
    budget_s: float | None = 240.0
    max_outer: int | None = None
    max_inner_iters: int = InnerConfig.max_inner_iters
    target_residual: float | None = 1e-10
    mu0: float = OuterConfig.mu0
    mu_factor: float = OuterConfig.mu_factor
    mu_power: float = OuterConfig.mu_power
    delta_hat0: float | None = None
    delta_bar: float = OuterConfig.delta_bar
    delta_max: float = InnerConfig.delta_max
    eta: float = InnerConfig.eta
    contract_coeff: float = InnerConfig.contract_coeff
    clip_c_lo: float = InnerConfig.clip_c_lo
    clip_c_hi: float = InnerConfig.clip_c_hi
    tcg_kappa: float = InnerConfig.tcg_kappa
    tcg_theta: float = InnerConfig.tcg_theta
    exact_tol: float | None = None
    active_tol: float = DEFAULT_ACTIVE_TOL
    clock: ClockKind = ClockKind.WALL
    n: int = 5
    k: int = 3
    alpha: float = 1e7
    c: float = -0.01
    state_dim: int = 5
    h: float = 0.02
    n_obs: int = 20
    frac1: float = 0.2
    frac2: float = 0.1
    noise_sigma: float = 1e-3
    feasibility_tol: float = 1e-3

    def __post_init__(self) -> None:
        for key, enum in _ENUMS.items():
            try:
                object.__setattr__(self, key, enum(getattr(self, key)))
            except ValueError as e:
                allowed = ", ".join(m.value for m in enum)
                value = getattr(self, key)
                msg = f"Invalid {key} {value!r}; expected one of {allowed}"
                raise InvalidInputError(msg) from e
        if self.budget_s is not None and not self.budget_s > 0.0:
            msg = f"budget_s must be positive, got {self.budget_s}"
            raise InvalidInputError(msg)

    @property
    def use_second_order(self) -> bool:
        """``auto`` turns the second-order test on exactly for the exact solver."""
        if self.second_order is SecondOrder.AUTO:
            return self.subsolver is Subsolver.EXACT
        return self.second_order is SecondOrder.ON

    def outer_config(self) -> OuterConfig:
        """Solver configuration; raises ``InvalidInputError`` on bad values."""
        inner = InnerConfig(
            eta=self.eta,
            contract_coeff=self.contract_coeff,
            delta_max=self.delta_max,
            clip_c_lo=self.clip_c_lo,
            clip_c_hi=self.clip_c_hi,
            subsolver=self.subsolver,
            max_inner_iters=self.max_inner_iters,
            tcg_kappa=self.tcg_kappa,
            tcg_theta=self.tcg_theta,
            exact_tol=self.exact_tol,
        )
        return OuterConfig(
            mu0=self.mu0,
            mu_factor=self.mu_factor,
            mu_power=self.mu_power,
            delta_hat0=self.delta_hat0,
            delta_bar=self.delta_bar,
            stopping=StoppingConditions(second_order=self.use_second_order),
            inner=inner,
            budget_s=self.budget_s,
            max_outer=self.max_outer,
            target_residual=self.target_residual,
            active_tol=self.active_tol,
        )

    def make_clock(self) -> Callable[[], float]:
        if self.clock is ClockKind.VIRTUAL:
            return VirtualClock()
        return time.perf_counter

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready mapping; enums become their string values."""
        return {
            key: value.value if isinstance(value, StrEnum) else value
            for key, value in asdict(self).items()
        }

    def with_seed(self, seed: int) -> RunSettings:
        return replace(self, seed=seed)


_ANNOTATIONS = {f.name: str(f.type) for f in fields(RunSettings)}


def coerce_value(key: str, text: str) -> Any:
    """Parse the string ``text`` for setting ``key``.

    Raises
    ------
    InvalidInputError
        If ``key`` is unknown or ``text`` does not parse.
    """
    annotation = _ANNOTATIONS.get(key)
    if annotation is None:
        msg = f"Unknown setting '{key}'"
        raise InvalidInputError(msg)
    text = text.strip()
    optional = annotation.endswith("| None")
    kind = annotation.removesuffix("| None").strip()
    if optional and text.lower() in _NONE_WORDS:
        return None
    try:
        match kind:
            case "int":
                return int(text)
            case "float":
                return float(text)
            case _:
                return text
    except ValueError as e:
        msg = f"Setting '{key}' expects {kind}, got {text!r}"
        raise InvalidInputError(msg) from e


def read_settings_file(path: Path) -> dict[str, Any]:
    """Parse a config file into typed values.

    Raises
    ------
    InvalidInputError
        If the file is missing, a line has no value, or a key or value is
        invalid.
    """
    if not path.is_file():
        msg = f"Config file {path} does not exist"
        raise InvalidInputError(msg)
    raw = dotenv_values(path)
    values = {}
    for key, text in raw.items():
        if text is None:
            msg = f"Config key '{key}' in {path} has no value"
            raise InvalidInputError(msg)
        values[key.strip()] = coerce_value(key.strip(), text)
    logger.debug("Read %d settings from %s", len(values), path)
    return values


def resolve_settings(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunSettings:
    """Merge defaults, file values and command-line overrides, in that order.

    ``None`` entries in ``overrides`` mean "flag not given" and are skipped.
    """
    merged: dict[str, Any] = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(merged) - set(_ANNOTATIONS)
    if unknown:
        msg = f"Unknown settings: {', '.join(sorted(unknown))}"
        raise InvalidInputError(msg)
    return RunSettings(**merged)
