"""Closed-loop trials, error metrics and Monte Carlo sweeps over sampling periods.

Every random draw of a trial comes from a substream keyed by the trial index
(see :class:`RngStreamPlan`), so a sweep yields identical numbers whatever the
number of worker processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from src.config import ERROR_MESSAGES

from ..model import (
    BoxStatistics,
    ConfigurationError,
    NumericalError,
    DesiredSignalSpec,
    RngStreamPlan,
    SamplingPolicy,
    ScenarioConfig,
    SweepResult,
    SweepRow,
    TclFleet,
    TclTrace,
    TrialResult,
)
from .dlc_controller import DirectLoadController, actuate_fleet
from .population import sample_initial_arrays, sample_population
from .tcl_dynamics import deadband_excursion, step_fleet

__all__ = [
    "generate_desired_signal",
    "error_metrics",
    "box_statistics",
    "command_exit_count",
    "build_fleet",
    "simulate_trial",
    "run_trial",
    "run_sweep",
]

logger = logging.getLogger(__name__)

KW_PER_MW = 1000.0
COMFORT_TOLERANCE = 1e-12


def generate_desired_signal(spec: DesiredSignalSpec, stream: np.random.Generator,
                            h_step: float = 1.0) -> np.ndarray:
    """Uniform knots every ``knot_period`` minutes, linearly interpolated per step (kW)."""
    n_knots = int(round(spec.horizon / spec.knot_period)) + 1
    knot_minutes = np.arange(n_knots) * spec.knot_period
    knot_values = stream.uniform(spec.low, spec.high, size=n_knots)
    minutes = np.arange(int(round(spec.horizon / h_step)) + 1) * h_step
    return np.interp(minutes, knot_minutes, knot_values)


def error_metrics(actual: Sequence[float], desired: Sequence[float]) -> Dict[str, float]:
    """l1, l2 and RMS of the tracking error, with the error converted to MW."""
    actual = np.asarray(actual, dtype=float)
    desired = np.asarray(desired, dtype=float)
    if actual.shape != desired.shape:
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("actual", actual.size, desired.size),
            field="actual")
    e = (actual - desired) / KW_PER_MW
    l2 = float(np.sqrt(np.sum(e * e)))
    return {
        "l1": float(np.sum(np.abs(e))),
        "l2": l2,
        "rms": l2 / math.sqrt(e.size) if e.size else 0.0,
    }


def box_statistics(data: Iterable[float]) -> BoxStatistics:
    """Mean, standard error and box-plot summary.

    Quartiles use linear interpolation between order statistics (numpy's
    default ``percentile`` method). Whiskers sit at the most extreme data
    points inside ``[q1 - 1.5 IQR, q3 + 1.5 IQR]``; anything outside is an
    outlier.
    """
    values = np.asarray(list(data), dtype=float)
    if values.size == 0:
        raise ConfigurationError("box statistics need at least one value", field="n_trials")
    q1, median, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = np.sort(values[(values < lo_fence) | (values > hi_fence)])
    n = int(values.size)
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return BoxStatistics(
        n=n, mean=float(values.mean()), stderr=stderr,
        q1=q1, median=median, q3=q3,
        lo_whisker=float(inside.min()), hi_whisker=float(inside.max()),
        outliers=tuple(float(v) for v in outliers),
    )


def command_exit_count(low: np.ndarray, high: np.ndarray, toggles: np.ndarray,
                       theta_next: np.ndarray, eps: np.ndarray) -> int:
    """Switched TCLs that ended the step further outside the deadband than ``|eps|``."""
    excess = deadband_excursion(low, high, theta_next) - np.abs(eps)
    return int(np.count_nonzero(toggles & (excess > COMFORT_TOLERANCE)))


def build_fleet(scenario: ScenarioConfig, plan: RngStreamPlan) -> Tuple[TclFleet, np.ndarray]:
    """Draw the population and the desired signal from ``plan``."""
    params = sample_population(scenario.population, plan.stream("population"))
    desired = generate_desired_signal(scenario.desired_signal, plan.stream("desired-signal"),
                                      scenario.h_step)
    return TclFleet.from_params(params), desired


def simulate_trial(fleet: TclFleet, p_desired: np.ndarray, scenario: ScenarioConfig,
                   plan: RngStreamPlan, trial_index: int = 0,
                   trace_tcl: Optional[int] = None) -> TrialResult:
    """One closed-loop trial on a fixed population and desired signal.

    Per step: refresh the estimate (measurement at sampling instants, dead
    reckoning otherwise), issue commands and let TCLs actuate, record the
    actual draw, then advance every TCL with fresh process noise. A controlled
    trial also advances an uncontrolled twin with the same noise for the
    comfort comparison.

    Raises:
        NumericalError: a switched TCL left its deadband by more than the
            noise of that step, which the switching guard rules out.
    """
    n, n_steps, h_step = len(fleet), scenario.n_steps, scenario.h_step
    if p_desired.shape != (n_steps + 1,):
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("p_desired", p_desired.size, n_steps + 1),
            field="p_desired")
    if trace_tcl is not None and not 0 <= trace_tcl < n:
        raise ConfigurationError(
            ERROR_MESSAGES["OUT_OF_RANGE"].format("trace_tcl", f"[0, {n})", trace_tcl),
            field="trace_tcl")

    theta, m = sample_initial_arrays(fleet, scenario.population.init_on_probability,
                                     plan.stream("initial-states", trial_index))
    noise = plan.stream("process-noise", trial_index).normal(
        0.0, scenario.noise.std, size=(n_steps, n))
    control = scenario.control_enabled
    if control:
        uniforms = plan.stream("actuation", trial_index).random((n_steps + 1, n))
        controller = DirectLoadController(fleet, scenario.controller, theta, m)
        theta_u, m_u = theta.copy(), m.copy()

    p_actual = np.zeros(n_steps + 1)
    n_on = np.zeros(n_steps + 1, dtype=np.int64)
    excursion = np.zeros(n)
    excursion_u = np.zeros(n)
    forced = np.zeros(n, dtype=np.int64)
    guarded = 0
    no_toggle = np.zeros(n, dtype=bool)
    trace_theta = np.zeros(n_steps + 1)
    trace_mode = np.zeros(n_steps + 1, dtype=np.int64)
    trace_cmd = np.zeros(n_steps + 1, dtype=bool)
    low, high = fleet.deadband_low, fleet.deadband_high

    for k in range(n_steps + 1):
        minute = k * h_step
        toggles = no_toggle
        if control:
            if scenario.sampling.is_sampling_instant(minute):
                controller.observe(theta, m)
            elif k > 0:
                controller.predict()
            if _is_command_instant(minute, scenario.command_period):
                cmds = controller.command(float(p_desired[k]))
                toggles, refused = actuate_fleet(fleet, theta, m, cmds,
                                                 scenario.controller.n_bins, uniforms[k])
                guarded += refused
        m_eff = np.where(toggles, 1.0 - m, m)
        p_actual[k] = float(np.dot(fleet.P_elec, m_eff))
        n_on[k] = int(np.count_nonzero(m_eff))
        forced += toggles
        excursion = np.maximum(excursion, deadband_excursion(low, high, theta))
        if trace_tcl is not None:
            trace_theta[k] = theta[trace_tcl]
            trace_mode[k] = int(m_eff[trace_tcl])
            trace_cmd[k] = bool(toggles[trace_tcl])
        if control:
            excursion_u = np.maximum(excursion_u, deadband_excursion(low, high, theta_u))
        if k < n_steps:
            theta, m = step_fleet(fleet, theta, m, noise[k], toggles)
            exits = command_exit_count(low, high, toggles, theta, noise[k])
            if exits:
                raise NumericalError(ERROR_MESSAGES["COMMAND_EXIT"].format(trial_index, exits))
            if control:
                theta_u, m_u = step_fleet(fleet, theta_u, m_u, noise[k], no_toggle)

    if not control:
        excursion_u = excursion
    violations = int(np.count_nonzero(excursion > excursion_u + COMFORT_TOLERANCE))
    logger.debug("Trial %d: %d TCL(s) peaked further outside the deadband than without "
                 "control, %d switch(es) refused", trial_index, violations, guarded)

    metrics = error_metrics(p_actual, p_desired)
    trace = None
    if trace_tcl is not None:
        trace = TclTrace(tcl_index=trace_tcl, theta=trace_theta, mode=trace_mode,
                         commanded=trace_cmd, deadband_low=float(low[trace_tcl]),
                         deadband_high=float(high[trace_tcl]))
    return TrialResult(
        minutes=np.arange(n_steps + 1) * h_step,
        p_actual=p_actual, p_desired=np.array(p_desired, dtype=float), n_on=n_on,
        max_excursion=excursion, forced_toggles=forced,
        l1=metrics["l1"], l2=metrics["l2"], rms=metrics["rms"],
        max_excursion_uncontrolled=excursion_u, guarded_toggles=guarded,
        comfort_violations=violations, trace=trace,
    )


def _is_command_instant(minute: float, period: float) -> bool:
    ratio = minute / period
    return abs(ratio - round(ratio)) <= 1e-9


def run_trial(scenario: ScenarioConfig, trial_seed: int,
              trace_tcl: Optional[int] = None) -> TrialResult:
    """Draw population and desired signal from ``trial_seed`` and run one trial."""
    plan = RngStreamPlan(trial_seed)
    fleet, desired = build_fleet(scenario, plan)
    return simulate_trial(fleet, desired, scenario, plan, 0, trace_tcl)


# Shared, read-only inputs of the sweep, installed once per worker process.
_SWEEP_STATE: Dict[str, object] = {}


def _init_sweep_worker(fleet: TclFleet, desired: np.ndarray,
                       variants: List[ScenarioConfig], seed: int) -> None:
    _SWEEP_STATE.update(fleet=fleet, desired=desired, variants=variants,
                        plan=RngStreamPlan(seed))


def _sweep_worker(task: Tuple[int, int]) -> Tuple[float, int]:
    """Module-level so ProcessPoolExecutor can pickle it."""
    variant_index, trial_index = task
    result = simulate_trial(_SWEEP_STATE["fleet"], _SWEEP_STATE["desired"],
                            _SWEEP_STATE["variants"][variant_index],
                            _SWEEP_STATE["plan"], trial_index)
    return result.l1, result.comfort_violations


def run_sweep(scenario: ScenarioConfig, h_list: Sequence[float], n_trials: int,
              base_seed: int, *, threads: int = 1, include_uncontrolled: bool = False,
              progress: bool = False) -> SweepResult:
    """Box statistics of the l1 error for each observation period.

    One population and one desired signal are drawn from ``base_seed`` and
    held fixed; trial ``t`` uses the noise, initial-state and actuation
    substreams keyed by ``t`` for every period, so periods are compared on
    common random numbers.
    """
    if int(n_trials) != n_trials or n_trials < 1:
        raise ConfigurationError(
            ERROR_MESSAGES["NONPOSITIVE"].format("n_trials", n_trials), field="trials")
    if not h_list and not include_uncontrolled:
        raise ConfigurationError("h_list must not be empty", field="h_list")
    plan = RngStreamPlan(base_seed)
    fleet, desired = build_fleet(scenario, plan)

    variants: List[Tuple[float, ScenarioConfig]] = []
    if include_uncontrolled:
        variants.append((0.0, replace(scenario, control_enabled=False)))
    for h in sorted(set(float(h) for h in h_list)):
        sampling = SamplingPolicy(h_obs=h, phase=scenario.sampling.phase)
        variants.append((h, replace(scenario, sampling=sampling, control_enabled=True)))

    tasks = [(v, t) for v in range(len(variants)) for t in range(n_trials)]
    init_args = (fleet, desired, [variant for _, variant in variants], base_seed)
    outcomes = _map_tasks(tasks, init_args, threads, progress)

    result = SweepResult()
    for index, (h, variant) in enumerate(variants):
        chunk = outcomes[index * n_trials:(index + 1) * n_trials]
        l1_values = [l1 for l1, _ in chunk]
        result.trial_l1[h] = l1_values
        result.comfort_violations += sum(v for _, v in chunk)
        result.rows.append(SweepRow(h_obs=h, stats=box_statistics(l1_values),
                                    control_enabled=variant.control_enabled))
        logger.info("h=%g min: mean l1 %.4g MW over %d trials", h,
                    result.rows[-1].stats.mean, n_trials)

    controlled = [(h, v) for h, values in result.trial_l1.items() if h > 0 for v in values]
    if len({h for h, _ in controlled}) > 1:
        rho, p_value = stats.spearmanr([h for h, _ in controlled], [v for _, v in controlled])
        if np.isfinite(rho):
            result.spearman_rho, result.spearman_p = float(rho), float(p_value)
    return result


def _map_tasks(tasks: List[Tuple[int, int]], init_args: tuple, threads: int,
               progress: bool) -> List[Tuple[float, int]]:
    """Run trial tasks inline or on a process pool; output order follows ``tasks``."""
    bar = tqdm(total=len(tasks), desc="trials", unit="trial", disable=not progress)
    try:
        if threads <= 1:
            _init_sweep_worker(*init_args)
            outcomes = []
            for task in tasks:
                outcomes.append(_sweep_worker(task))
                bar.update()
            return outcomes
        chunksize = max(1, len(tasks) // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_sweep_worker,
                                 initargs=init_args) as executor:
            outcomes = []
            for outcome in executor.map(_sweep_worker, tasks, chunksize=chunksize):
                outcomes.append(outcome)
                bar.update()
            return outcomes
    finally:
        bar.close()
