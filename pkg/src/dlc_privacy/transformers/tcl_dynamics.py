"""Thermal dynamics and local hysteresis control of cooling TCLs.

Scalar functions operate on one :class:`TclParams` / :class:`TclState`; the
``*_fleet`` variants apply the same arithmetic, in the same order, to whole
populations so that both paths agree bit for bit.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from src.config import ERROR_MESSAGES

from ..model import ConfigurationError, TclFleet, TclParams, TclState
from ..model.tcl import decay_factor

__all__ = [
    "compute_a",
    "step_thermal",
    "hysteresis_next_mode",
    "on_off_drift_rates",
    "step_fleet",
    "fleet_next_mode",
    "deadband_excursion",
    "max_one_step_drift",
]

logger = logging.getLogger(__name__)


def compute_a(params: TclParams) -> float:
    """Per-step decay factor ``exp(-h/(R*C))`` with ``h`` in hours."""
    if not params.R * params.C > 0:
        raise ConfigurationError(
            ERROR_MESSAGES["NONPOSITIVE"].format("R*C", params.R * params.C), field="R")
    return decay_factor(params.h_step, params.R, params.C)


def hysteresis_next_mode(params: TclParams, theta_next: float, m_curr: int) -> int:
    """Cooling thermostat: OFF below the floor, ON above the ceiling, else hold."""
    if theta_next < params.deadband_low:
        return 0
    if theta_next > params.deadband_high:
        return 1
    return int(m_curr)


def step_thermal(params: TclParams, state: TclState, eps: float,
                 forced_toggle: bool) -> TclState:
    """Advance one TCL by one step.

    A forced toggle (the DLC command) takes effect before the thermal update of
    the same step; the hysteresis rule then looks at the new temperature.
    """
    m = 1 - state.m if forced_toggle else state.m
    a = compute_a(params)
    theta_next = a * state.theta + (1.0 - a) * (params.theta_a - m * params.theta_g) + eps
    return TclState(theta=theta_next, m=hysteresis_next_mode(params, theta_next, m))


def on_off_drift_rates(params: TclParams) -> Tuple[float, float, float]:
    """Linearised drift at the setpoint and the implied duty cycle.

    Returns:
        ``(d_on, d_off, duty_cycle)`` with drifts in degC per step.
    """
    a = compute_a(params)
    d_off = (1.0 - a) * (params.theta_a - params.theta_set)
    d_on = (1.0 - a) * (params.theta_a - params.theta_g - params.theta_set)
    if d_on >= 0 or d_off <= 0:
        raise ConfigurationError(
            f"TCL does not cycle: d_on={d_on:.4g}, d_off={d_off:.4g}", field="theta_a")
    return d_on, d_off, d_off / (d_off + abs(d_on))


def fleet_next_mode(fleet: TclFleet, theta_next: np.ndarray, m_curr: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hysteresis_next_mode`; returns a float 0/1 array."""
    m_next = np.asarray(m_curr, dtype=float).copy()
    m_next[theta_next < fleet.deadband_low] = 0.0
    m_next[theta_next > fleet.deadband_high] = 1.0
    return m_next


def step_fleet(fleet: TclFleet, theta: np.ndarray, m: np.ndarray, eps: np.ndarray,
               forced_toggle: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`step_thermal` for every TCL of ``fleet``."""
    m = np.where(forced_toggle, 1.0 - m, m)
    theta_next = fleet.a * theta + (1.0 - fleet.a) * (fleet.theta_a - m * fleet.theta_g) + eps
    return theta_next, fleet_next_mode(fleet, theta_next, m)


def deadband_excursion(low, high, theta):
    """Distance outside ``[low, high]``; zero inside. Works on scalars and arrays."""
    return np.maximum(np.maximum(theta - high, low - theta), 0.0)


def max_one_step_drift(fleet: TclFleet) -> np.ndarray:
    """Largest zero-noise one-step move from anywhere in the deadband.

    OFF drifts fastest at the floor, ON fastest at the ceiling.
    """
    off = (1.0 - fleet.a) * (fleet.theta_a - fleet.deadband_low)
    on = (1.0 - fleet.a) * (fleet.deadband_high - (fleet.theta_a - fleet.theta_g))
    return np.maximum(off, on)
