"""Centralised direct load controller.

The controller dead-reckons every TCL between measurements, sorts the
estimates into temperature bins per mode, and broadcasts per-bin switching
fractions. Each TCL locates its own bin from its true state and switches
with the broadcast probability.

Bin layout for ``n_bins = 2K``: indices ``0..K-1`` are OFF bins ordered by
increasing normalised temperature, indices ``K..2K-1`` are ON bins ordered by
decreasing normalised temperature. Both walks start next to the ON/OFF
boundary, i.e. with the TCLs whose thermostat would switch them soonest.

A TCL only accepts a switch whose zero-noise next temperature stays inside
its deadband (:func:`switch_allowed`). The controller applies the same rule to
its estimates, so refused switches are neither counted as switchable power
nor credited in the mean-field update.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import ERROR_MESSAGES

from ..model import (
    ConfigurationError,
    ControllerConfig,
    EstimatorState,
    SwitchCommand,
    TclFleet,
    TclParams,
    TclState,
)
from .tcl_dynamics import fleet_next_mode

__all__ = [
    "normalized_position",
    "normalized_positions",
    "assign_bin",
    "assign_bins",
    "walk_order",
    "switch_allowed",
    "estimator_predict",
    "ingest_measurements",
    "compute_commands",
    "apply_commands_to_estimator",
    "actuate",
    "actuate_fleet",
    "DirectLoadController",
]

logger = logging.getLogger(__name__)

Observation = Union[TclState, Tuple[float, float]]


def normalized_position(params: TclParams, theta: float) -> float:
    """Position of ``theta`` in the deadband: 0 at the floor, 1 at the ceiling."""
    x = (theta - params.deadband_low) / params.delta
    return min(max(x, 0.0), 1.0)


def normalized_positions(fleet: TclFleet, theta: np.ndarray) -> np.ndarray:
    return np.clip((theta - fleet.deadband_low) / fleet.delta, 0.0, 1.0)


def assign_bin(x: float, m: int, n_bins: int) -> int:
    half = n_bins // 2
    k = min(int(np.floor(x * half)), half - 1)
    return k if int(m) == 0 else half + (half - 1 - k)


def assign_bins(x: np.ndarray, m: np.ndarray, n_bins: int) -> np.ndarray:
    """Vectorised :func:`assign_bin` for integer (0/1) modes."""
    half = n_bins // 2
    k = np.minimum(np.floor(x * half).astype(np.int64), half - 1)
    return np.where(np.asarray(m) >= 0.5, half + (half - 1 - k), k)


def walk_order(n_bins: int, turn_on: bool) -> List[int]:
    """Bins to visit: warmest OFF first when adding load, coolest ON first when shedding."""
    half = n_bins // 2
    if turn_on:
        return list(range(half - 1, -1, -1))
    return list(range(n_bins - 1, half - 1, -1))


def switch_allowed(fleet: TclFleet, theta: np.ndarray, target_mode) -> np.ndarray:
    """TCLs that may be switched into ``target_mode`` (scalar or per-TCL 0/1).

    The TCL must be inside its deadband now, and its zero-noise next
    temperature in the target mode must be too. The prediction uses the
    arithmetic of :func:`step_fleet`, so a switched TCL ends the step at most
    ``|eps|`` outside its deadband.
    """
    low, high = fleet.deadband_low, fleet.deadband_high
    predicted = fleet.a * theta + (1.0 - fleet.a) * (fleet.theta_a - target_mode * fleet.theta_g)
    return ((theta >= low) & (theta <= high)
            & (predicted >= low) & (predicted <= high))


def estimator_predict(est: EstimatorState) -> EstimatorState:
    """Advance every estimate one step with zero noise and no commands.

    A fractional ``m_hat`` is treated as a mixture of an ON branch and an OFF
    branch: the temperature is the weighted average of both updates, and each
    branch's mass follows the hysteresis rule applied to its own temperature.
    With ``m_hat`` in {0, 1} this is exactly :func:`step_thermal`.
    """
    fleet = est.fleet
    theta, m = est.theta_hat, est.m_hat
    theta_on = fleet.a * theta + (1.0 - fleet.a) * (fleet.theta_a - fleet.theta_g)
    theta_off = fleet.a * theta + (1.0 - fleet.a) * fleet.theta_a
    theta_next = m * theta_on + (1.0 - m) * theta_off
    on_stays_on = fleet_next_mode(fleet, theta_on, np.ones_like(m))
    off_turns_on = fleet_next_mode(fleet, theta_off, np.zeros_like(m))
    m_next = m * on_stays_on + (1.0 - m) * off_turns_on
    return est.with_values(theta_next, np.clip(m_next, 0.0, 1.0))


def ingest_measurements(est: EstimatorState,
                        observations: Union[Sequence[Observation],
                                            Tuple[np.ndarray, np.ndarray]]) -> EstimatorState:
    """Replace the estimates by a full-population snapshot.

    ``observations`` is either a sequence of ``TclState``/``(theta, m)`` pairs
    or a ``(theta_array, m_array)`` tuple.
    """
    n = len(est.fleet)
    if (isinstance(observations, tuple) and len(observations) == 2
            and isinstance(observations[0], np.ndarray)):
        theta, m = observations
    else:
        pairs = [(o.theta, o.m) if isinstance(o, TclState) else o for o in observations]
        theta = np.array([p[0] for p in pairs], dtype=float)
        m = np.array([p[1] for p in pairs], dtype=float)
    if len(theta) != n or len(m) != n:
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("observations", len(theta), n),
            field="observations")
    return est.with_values(np.array(theta, dtype=float), np.array(m, dtype=float))


def compute_commands(est: EstimatorState, p_des: float,
                     config: Optional[ControllerConfig] = None) -> List[SwitchCommand]:
    """Greedy per-bin switching fractions that close the estimated mismatch.

    ``delta_p = p_des - sum(P_elec * m_hat)``. A positive mismatch walks OFF
    bins warmest first, a negative one walks ON bins coolest first; whole bins
    are consumed with fraction 1 until one partial bin absorbs the remainder.
    Mismatches smaller than the dead zone issue nothing.
    """
    config = config or ControllerConfig()
    delta_p = p_des - est.estimated_power()
    if delta_p == 0 or abs(delta_p) < config.deadzone_kw:
        return []
    turn_on = delta_p > 0
    switchable = bin_switchable_power(est, config.n_bins, turn_on)

    commands: List[SwitchCommand] = []
    remaining = abs(delta_p)
    for b in walk_order(config.n_bins, turn_on):
        w = switchable[b]
        if w <= 0:
            continue
        if remaining >= w:
            commands.append(SwitchCommand(bin_index=b, fraction=1.0))
            remaining -= w
        else:
            commands.append(SwitchCommand(bin_index=b, fraction=remaining / w))
            remaining = 0.0
        if remaining <= 0:
            break
    if remaining > 0:
        logger.debug("Switchable power exhausted, %.1f kW of mismatch left", remaining)
    return commands


def bin_switchable_power(est: EstimatorState, n_bins: int, turn_on: bool) -> np.ndarray:
    """Estimated power each bin can move in the given direction, in kW."""
    x = normalized_positions(est.fleet, est.theta_hat)
    if turn_on:
        bins = assign_bins(x, np.zeros_like(x), n_bins)
        weights = est.fleet.P_elec * (1.0 - est.m_hat)
    else:
        bins = assign_bins(x, np.ones_like(x), n_bins)
        weights = est.fleet.P_elec * est.m_hat
    weights = weights * switch_allowed(est.fleet, est.theta_hat, 1.0 if turn_on else 0.0)
    return np.bincount(bins, weights=weights, minlength=n_bins)


def command_fractions(cmds: Sequence[SwitchCommand], n_bins: int) -> np.ndarray:
    """Dense per-bin fraction vector; bins without a command get 0."""
    fractions = np.zeros(n_bins)
    for cmd in cmds:
        if not 0 <= cmd.bin_index < n_bins:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("bin_index", f"[0, {n_bins})", cmd.bin_index),
                field="bin_index")
        fractions[cmd.bin_index] = cmd.fraction
    return fractions


def apply_commands_to_estimator(est: EstimatorState, cmds: Sequence[SwitchCommand],
                                config: Optional[ControllerConfig] = None) -> EstimatorState:
    """Mean-field update: move fraction ``c`` of a bin's OFF (or ON) mass across.

    Temperatures are untouched; only the expected ON occupancy changes.
    Estimates the TCL-side guard would refuse keep their occupancy.
    """
    if not cmds:
        return est
    n_bins = (config or ControllerConfig()).n_bins
    half = n_bins // 2
    fractions = command_fractions(cmds, n_bins)
    x = normalized_positions(est.fleet, est.theta_hat)
    off_bins = assign_bins(x, np.zeros_like(x), n_bins)
    on_bins = assign_bins(x, np.ones_like(x), n_bins)
    m = est.m_hat
    c_off = np.where(off_bins < half, fractions[off_bins], 0.0)
    c_on = np.where(on_bins >= half, fractions[on_bins], 0.0)
    c_off = c_off * switch_allowed(est.fleet, est.theta_hat, 1.0)
    c_on = c_on * switch_allowed(est.fleet, est.theta_hat, 0.0)
    m_next = m + c_off * (1.0 - m) - c_on * m
    return est.with_values(est.theta_hat, np.clip(m_next, 0.0, 1.0))


def actuate_fleet(fleet: TclFleet, theta: np.ndarray, m: np.ndarray,
                  cmds: Sequence[SwitchCommand], n_bins: int,
                  uniforms: np.ndarray) -> Tuple[np.ndarray, int]:
    """TCL-side rule: switch with the probability broadcast to one's own bin.

    A TCL refuses a switch that :func:`switch_allowed` rejects.
    ``uniforms`` holds one U[0, 1) draw per TCL.

    Returns:
        ``(forced_toggle, guarded)`` where ``guarded`` counts refused switches.
    """
    if not cmds:
        return np.zeros(len(fleet), dtype=bool), 0
    fractions = command_fractions(cmds, n_bins)
    bins = assign_bins(normalized_positions(fleet, theta), m, n_bins)
    wants = uniforms < fractions[bins]
    allowed = switch_allowed(fleet, theta, 1.0 - m)
    return wants & allowed, int(np.count_nonzero(wants & ~allowed))


def actuate(true_states: Sequence[TclState], params_list: Sequence[TclParams],
            cmds: Sequence[SwitchCommand], stream: np.random.Generator,
            n_bins: int = 10) -> List[bool]:
    """List form of :func:`actuate_fleet` drawing one uniform per TCL from ``stream``."""
    if len(true_states) != len(params_list):
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("true_states", len(true_states),
                                                     len(params_list)),
            field="true_states")
    fleet = TclFleet.from_params(params_list)
    theta = np.array([s.theta for s in true_states], dtype=float)
    m = np.array([s.m for s in true_states], dtype=float)
    toggles, _ = actuate_fleet(fleet, theta, m, cmds, n_bins, stream.random(len(fleet)))
    return [bool(t) for t in toggles]


class DirectLoadController:
    """Stateful wrapper used by the simulation engine, one instance per trial."""

    def __init__(self, fleet: TclFleet, config: ControllerConfig,
                 theta0: np.ndarray, m0: np.ndarray) -> None:
        self.config = config
        self.estimate = EstimatorState(theta_hat=np.array(theta0, dtype=float),
                                       m_hat=np.array(m0, dtype=float), fleet=fleet)

    def observe(self, theta: np.ndarray, m: np.ndarray) -> None:
        self.estimate = ingest_measurements(self.estimate, (theta, m))

    def predict(self) -> None:
        self.estimate = estimator_predict(self.estimate)

    def command(self, p_des: float) -> List[SwitchCommand]:
        cmds = compute_commands(self.estimate, p_des, self.config)
        self.estimate = apply_commands_to_estimator(self.estimate, cmds, self.config)
        return cmds
