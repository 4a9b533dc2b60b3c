"""Controller-side value types: configuration, estimator state, commands."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from src.config import ERROR_MESSAGES

from .errors import ConfigurationError
from .tcl import TclFleet

__all__ = ["ControllerConfig", "EstimatorState", "SwitchCommand"]


@dataclass(frozen=True)
class ControllerConfig:
    """Binning and command cadence of the direct load controller.

    ``command_period`` defaults to the simulation step when left as ``None``.
    """

    n_bins: int = 10
    command_period: Optional[float] = None
    deadzone_kw: float = 2.5

    def __post_init__(self) -> None:
        if int(self.n_bins) != self.n_bins or self.n_bins < 2 or self.n_bins % 2:
            raise ConfigurationError(
                f"n_bins must be an even integer >= 2, got {self.n_bins}",
                field="controller.n_bins")
        if self.command_period is not None and not self.command_period > 0:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("command_period", self.command_period),
                field="controller.command_period")
        if not (self.deadzone_kw >= 0 and math.isfinite(self.deadzone_kw)):
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("deadzone_kw", "[0, inf)", self.deadzone_kw),
                field="controller.deadzone_kw")


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """The controller's dead-reckoned copy of every TCL's state.

    ``m_hat`` may be fractional between measurements: it is the expected ON
    occupancy after probabilistic commands. Arrays are never mutated in place;
    every update returns a new instance.
    """

    theta_hat: np.ndarray
    m_hat: np.ndarray
    fleet: TclFleet

    def __post_init__(self) -> None:
        n = len(self.fleet)
        for name in ("theta_hat", "m_hat"):
            size = np.shape(getattr(self, name))[0]
            if size != n:
                raise ConfigurationError(
                    ERROR_MESSAGES["LENGTH_MISMATCH"].format(name, size, n), field=name)
        if np.any(self.m_hat < 0) or np.any(self.m_hat > 1):
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("m_hat", "[0, 1]", "values outside"),
                field="m_hat")

    def with_values(self, theta_hat: np.ndarray, m_hat: np.ndarray) -> "EstimatorState":
        return replace(self, theta_hat=theta_hat, m_hat=m_hat)

    def estimated_power(self) -> float:
        """Estimated aggregate draw, sum of P_elec * m_hat, in kW."""
        return float(np.dot(self.fleet.P_elec, self.m_hat))


@dataclass(frozen=True)
class SwitchCommand:
    """Ask the TCLs of one bin to switch mode with probability ``fraction``."""

    bin_index: int
    fraction: float

    def __post_init__(self) -> None:
        if not 0 <= self.fraction <= 1:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("fraction", "[0, 1]", self.fraction),
                field="fraction")
