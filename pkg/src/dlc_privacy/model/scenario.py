"""Simulation scenario inputs and trial / sweep outputs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import ERROR_MESSAGES

from .controller import ControllerConfig
from .errors import ConfigurationError
from .population import PopulationSpec
from .tcl import NoiseModel

__all__ = [
    "SamplingPolicy",
    "DesiredSignalSpec",
    "ScenarioConfig",
    "TclTrace",
    "TrialResult",
    "BoxStatistics",
    "SweepRow",
    "SweepResult",
    "is_multiple",
]


def is_multiple(value: float, base: float, tol: float = 1e-9) -> bool:
    """True when ``value`` is a positive integer multiple of ``base``."""
    ratio = value / base
    return round(ratio) >= 1 and abs(round(ratio) * base - value) <= tol * max(1.0, abs(value))


@dataclass(frozen=True)
class SamplingPolicy:
    """Full-population snapshots every ``h_obs`` minutes, offset by ``phase``."""

    h_obs: float = 1.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.h_obs > 0:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("h_obs", self.h_obs), field="sampling.h_obs")
        if self.phase < 0:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("phase", "[0, inf)", self.phase),
                field="sampling.phase")

    def is_sampling_instant(self, minute: float) -> bool:
        offset = minute - self.phase
        if offset < -1e-9:
            return False
        ratio = offset / self.h_obs
        return abs(ratio - round(ratio)) <= 1e-9


@dataclass(frozen=True)
class DesiredSignalSpec:
    """Piecewise-linear desired power with i.i.d. uniform knots (kW)."""

    knot_period: float = 5.0
    low: float = 875.0
    high: float = 1312.5
    horizon: float = 60.0

    def __post_init__(self) -> None:
        if not self.knot_period > 0:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("knot_period", self.knot_period),
                field="desired_signal.knot_period")
        if self.low > self.high:
            raise ConfigurationError(
                f"low ({self.low}) must not exceed high ({self.high})",
                field="desired_signal.low")
        if not is_multiple(self.horizon, self.knot_period):
            raise ConfigurationError(
                f"horizon {self.horizon} must be a multiple of knot_period {self.knot_period}",
                field="horizon.minutes")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything ``run_trial`` needs. ``population.seed`` is the base seed."""

    population: PopulationSpec
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sampling: SamplingPolicy = field(default_factory=SamplingPolicy)
    desired_signal: DesiredSignalSpec = field(default_factory=DesiredSignalSpec)
    noise: NoiseModel = field(default_factory=NoiseModel)
    control_enabled: bool = True

    def __post_init__(self) -> None:
        h_step = self.h_step
        if not is_multiple(self.sampling.h_obs, h_step):
            raise ConfigurationError(
                f"h_obs {self.sampling.h_obs} must be a positive integer multiple of "
                f"h_step {h_step}", field="sampling.h_obs")
        if not is_multiple(self.horizon, h_step):
            raise ConfigurationError(
                f"horizon {self.horizon} must be a multiple of h_step {h_step}",
                field="horizon.minutes")
        period = self.command_period
        if not is_multiple(period, h_step):
            raise ConfigurationError(
                f"command_period {period} must be a multiple of h_step {h_step}",
                field="controller.command_period")

    @property
    def h_step(self) -> float:
        return self.population.nominal.h_step

    @property
    def horizon(self) -> float:
        return self.desired_signal.horizon

    @property
    def n_steps(self) -> int:
        """Number of thermal updates; series have ``n_steps + 1`` entries."""
        return int(round(self.horizon / self.h_step))

    @property
    def command_period(self) -> float:
        return self.controller.command_period or self.h_step

    @property
    def seed(self) -> int:
        return self.population.seed


@dataclass(frozen=True, eq=False)
class TclTrace:
    """Temperature, mode and command markers of one TCL over a trial."""

    tcl_index: int
    theta: np.ndarray
    mode: np.ndarray
    commanded: np.ndarray
    deadband_low: float
    deadband_high: float


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Outputs of one closed-loop trial.

    Power series are in kW with one entry per step (``n_steps + 1``); scalar
    errors are in MW summed over steps.
    """

    minutes: np.ndarray
    p_actual: np.ndarray
    p_desired: np.ndarray
    n_on: np.ndarray
    max_excursion: np.ndarray
    forced_toggles: np.ndarray
    l1: float
    l2: float
    rms: float
    max_excursion_uncontrolled: Optional[np.ndarray] = None
    guarded_toggles: int = 0
    comfort_violations: int = 0
    trace: Optional[TclTrace] = None

    def __post_init__(self) -> None:
        n = len(self.minutes)
        for name in ("p_actual", "p_desired", "n_on"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(
                    ERROR_MESSAGES["LENGTH_MISMATCH"].format(name, len(getattr(self, name)), n),
                    field=name)

    def metrics(self) -> Dict[str, float]:
        return {"l1": self.l1, "l2": self.l2, "rms": self.rms}


@dataclass(frozen=True)
class BoxStatistics:
    """Box-plot summary with 1.5 IQR whiskers and linear-interpolation quantiles."""

    n: int
    mean: float
    stderr: float
    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    outliers: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.q1 <= self.median <= self.q3:
            raise ConfigurationError("quartiles out of order", field="median")


@dataclass(frozen=True)
class SweepRow:
    """Box statistics of the l1 error for one observation period."""

    h_obs: float
    stats: BoxStatistics
    control_enabled: bool = True


@dataclass
class SweepResult:
    """All rows of a sampling-period sweep, ascending by ``h_obs``."""

    rows: List[SweepRow] = field(default_factory=list)
    trial_l1: Dict[float, List[float]] = field(default_factory=dict)
    spearman_rho: Optional[float] = None
    spearman_p: Optional[float] = None
    comfort_violations: int = 0

    def row_for(self, h_obs: float) -> SweepRow:
        for row in self.rows:
            if math.isclose(row.h_obs, h_obs) and row.control_enabled:
                return row
        raise KeyError(h_obs)
