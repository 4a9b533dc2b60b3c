"""Value types describing a single thermostatically controlled load (TCL).

Only air-conditioning (cooling) TCLs are modelled: mode 1 draws power and
pulls the temperature towards ``theta_a - theta_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.config import ERROR_MESSAGES

from .errors import ConfigurationError

__all__ = ["TclParams", "TclState", "NoiseModel", "TclFleet", "decay_factor", "OFF", "ON"]

OFF = 0
ON = 1
MINUTES_PER_HOUR = 60.0


def decay_factor(h_step: float, R: float, C: float) -> float:
    """Return exp(-h/(R*C)) with h converted from minutes to hours."""
    return math.exp(-(h_step / MINUTES_PER_HOUR) / (R * C))


def _require_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ConfigurationError(
            ERROR_MESSAGES["NONPOSITIVE"].format(name, value), field=name)


@dataclass(frozen=True)
class TclParams:
    """Physical constants of one TCL.

    Units: R in degC/kW, C in kWh/degC, temperatures in degC, powers in kW and
    ``h_step`` in minutes.
    """

    R: float
    C: float
    theta_a: float
    theta_set: float
    delta: float
    P_trans: float
    P_elec: float
    h_step: float

    def __post_init__(self) -> None:
        for name in ("R", "C", "delta", "P_trans", "P_elec", "h_step"):
            _require_positive(name, getattr(self, name))
        # ON must drive below the floor and OFF above the ceiling.
        if not (self.theta_a - self.theta_g < self.deadband_low
                < self.deadband_high < self.theta_a):
            raise ConfigurationError(ERROR_MESSAGES["UNREACHABLE"].format(
                self.deadband_low, self.deadband_high, self.theta_a, self.theta_g),
                field="theta_a")

    @property
    def theta_g(self) -> float:
        """Temperature gain when ON, ``R * P_trans``."""
        return self.R * self.P_trans

    @property
    def deadband_low(self) -> float:
        return self.theta_set - self.delta / 2

    @property
    def deadband_high(self) -> float:
        return self.theta_set + self.delta / 2


@dataclass(frozen=True)
class TclState:
    """Internal temperature and ON/OFF mode of one TCL."""

    theta: float
    m: int

    def __post_init__(self) -> None:
        if self.m not in (OFF, ON):
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("m", "{0, 1}", self.m), field="m")
        if not math.isfinite(self.theta):
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("theta", "finite reals", self.theta),
                field="theta")


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian process noise added to every TCL temperature each step."""

    variance: float = 0.0005

    def __post_init__(self) -> None:
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("variance", "[0, inf)", self.variance),
                field="noise.variance")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True, eq=False)
class TclFleet:
    """Struct-of-arrays view of a population, used by the vectorised engine.

    Every array has one entry per TCL and is derived from a list of
    :class:`TclParams`, so fleet-level updates reproduce the scalar ones.
    """

    R: np.ndarray
    C: np.ndarray
    theta_a: np.ndarray
    theta_set: np.ndarray
    delta: np.ndarray
    P_trans: np.ndarray
    P_elec: np.ndarray
    h_step: np.ndarray
    a: np.ndarray
    theta_g: np.ndarray

    @classmethod
    def from_params(cls, params_list: Sequence[TclParams]) -> "TclFleet":
        if not params_list:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("n_tcls", 0), field="population.n_tcls")
        columns = {
            name: np.array([getattr(p, name) for p in params_list], dtype=float)
            for name in ("R", "C", "theta_a", "theta_set", "delta",
                         "P_trans", "P_elec", "h_step")
        }
        columns["a"] = np.array(
            [decay_factor(p.h_step, p.R, p.C) for p in params_list], dtype=float)
        columns["theta_g"] = columns["R"] * columns["P_trans"]
        return cls(**columns)

    def __len__(self) -> int:
        return int(self.R.shape[0])

    @property
    def deadband_low(self) -> np.ndarray:
        return self.theta_set - self.delta / 2

    @property
    def deadband_high(self) -> np.ndarray:
        return self.theta_set + self.delta / 2

    def params(self, index: int) -> TclParams:
        """Rebuild the scalar parameters of TCL ``index``."""
        return TclParams(
            R=float(self.R[index]), C=float(self.C[index]),
            theta_a=float(self.theta_a[index]), theta_set=float(self.theta_set[index]),
            delta=float(self.delta[index]), P_trans=float(self.P_trans[index]),
            P_elec=float(self.P_elec[index]), h_step=float(self.h_step[index]),
        )

    def to_params(self) -> List[TclParams]:
        return [self.params(i) for i in range(len(self))]
