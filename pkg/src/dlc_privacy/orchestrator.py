"""Pipeline Orchestrator – the *O* in DMOT.

One public method per CLI command. Each method:

1. Loads and resolves its configuration (Data layer)
2. Delegates the computation to the Transformer layer
3. Writes CSV tables and a JSON envelope next to each other (Data layer)
4. Returns a :class:`dlc_privacy.model.RunResult` for the CLI summary.

Workflow only; no simulation or bound arithmetic lives here.
"""

from __future__ import annotations

import copy
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src import __version__
from src.config import DEFAULT_PRIVACY_METHODS, config as default_config
from src.utils import output_path

from .data.config_loader import build_scenario, load_privacy_scenario, load_simulation_config
from .data.writers import write_envelope, write_population, write_table
from .model import (
    ConfigurationError,
    PrivacyRow,
    PrivacyScenario,
    ResultEnvelope,
    RngStreamPlan,
    RunResult,
    ScenarioConfig,
    SweepResult,
    TrialResult,
)
from .transformers.population import sample_population
from .transformers.privacy_scenarios import privacy_sweep, samples_in_window
from .transformers.sim_engine import build_fleet, run_sweep, simulate_trial

__all__ = ["Orchestrator", "TRAJECTORY_COLUMNS", "SWEEP_COLUMNS", "PRIVACY_COLUMNS",
           "TRACE_COLUMNS"]

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["step", "minute", "p_actual_kw", "p_desired_kw", "n_on"]
TRACE_COLUMNS = ["step", "minute", "theta_c", "mode", "commanded", "deadband_low",
                 "deadband_high"]
SWEEP_COLUMNS = ["h_min", "n_trials", "mean_l1_mw", "stderr_mw", "q1", "median", "q3",
                 "lo_whisker", "hi_whisker"]
PRIVACY_COLUMNS = ["h_min", "T", "alpha_map_exact", "alpha_map_mc", "mc_stderr",
                   "alpha_lecam_pinsker", "alpha_lecam_tv", "alpha_fano"]


class Orchestrator:
    """Coordinates configuration, computation and output for every command."""

    def __init__(self, *, cfg=default_config, threads: int | None = None,
                 progress: bool | None = None):
        """Logging is configured by the caller, see ``main.setup_application_logging``."""
        self.cfg = cfg
        self.threads = max(1, threads if threads is not None else cfg.THREADS)
        self.progress = sys.stderr.isatty() if progress is None else progress

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------
    def gen_population(self, *, config_path: Optional[Path] = None, seed: Optional[int] = None,
                       out: Path = Path("out/run")) -> RunResult:
        result, start = RunResult(command="gen-population"), RunResult.start_timer()
        scenario, resolved = self._simulation_config(config_path, seed=seed)

        logger.info("🧬 Sampling %d TCLs (seed %d)", scenario.population.n_tcls, scenario.seed)
        params = sample_population(scenario.population,
                                   RngStreamPlan(scenario.seed).stream("population"))
        path = write_population(params, scenario.seed, resolved, __version__,
                                output_path(out, "_population.json"))
        result.output_files.append(path)
        result.summary = {
            "n_tcls": len(params),
            "mean_R": float(np.mean([p.R for p in params])),
            "mean_C": float(np.mean([p.C for p in params])),
            "mean_P_trans": float(np.mean([p.P_trans for p in params])),
        }
        return self._finish(result, start)

    def simulate(self, *, config_path: Optional[Path] = None, seed: Optional[int] = None,
                 out: Path = Path("out/run"), control: Optional[bool] = None,
                 trace_tcl: Optional[int] = None) -> RunResult:
        result, start = RunResult(command="simulate"), RunResult.start_timer()
        overrides = {} if control is None else {("controller", "control_enabled"): control}
        scenario, resolved = self._simulation_config(config_path, seed=seed, overrides=overrides)

        logger.info("🔄 Simulating %d TCLs over %g minutes (h_obs=%g, control %s)",
                    scenario.population.n_tcls, scenario.horizon, scenario.sampling.h_obs,
                    "on" if scenario.control_enabled else "off")
        plan = RngStreamPlan(scenario.seed)
        fleet, desired = build_fleet(scenario, plan)
        trial = simulate_trial(fleet, desired, scenario, plan, 0, trace_tcl)

        result.output_files.append(
            write_table(self._trajectory_frame(trial), output_path(out, "_trajectory.csv")))
        if trial.trace is not None:
            result.output_files.append(
                write_table(self._trace_frame(trial), output_path(out, "_tcl.csv")))
        payload = self._trial_payload(trial)
        logger.info("🌡️  %d TCL(s) peaked further outside the deadband than their uncontrolled "
                    "twin, %d switch(es) refused by the comfort guard",
                    trial.comfort_violations, trial.guarded_toggles)
        result.output_files.append(write_envelope(
            self._envelope("simulate", resolved, {"base_seed": scenario.seed, "trial": 0},
                           payload),
            output_path(out, "_simulate.json")))
        result.summary = {k: payload[k] for k in ("l1_mw", "l2_mw", "rms_mw", "forced_toggles",
                                                  "comfort_violations")}
        return self._finish(result, start)

    def sweep(self, *, config_path: Optional[Path] = None, seed: Optional[int] = None,
              out: Path = Path("out/run"), h_list: Optional[Sequence[float]] = None,
              trials: Optional[int] = None, include_uncontrolled: bool = False) -> RunResult:
        result, start = RunResult(command="sweep"), RunResult.start_timer()
        scenario, resolved = self._simulation_config(
            config_path, seed=seed, overrides=self._sweep_overrides(h_list, trials))
        sweep = self._run_sweep(scenario, resolved, include_uncontrolled)

        result.output_files.append(
            write_table(self._sweep_frame(sweep), output_path(out, "_sweep.csv")))
        result.output_files.append(write_envelope(
            self._envelope("sweep", resolved, {"base_seed": scenario.seed},
                           self._sweep_payload(sweep, include_uncontrolled)),
            output_path(out, "_sweep.json")))
        result.summary = {
            "rows": len(sweep.rows),
            "trials_per_row": resolved["sweep"]["trials"],
            "spearman_rho": sweep.spearman_rho,
            "spearman_p": sweep.spearman_p,
            "comfort_violations": sweep.comfort_violations,
        }
        return self._finish(result, start)

    def privacy(self, *, scenario_source: Optional[str] = None, seed: Optional[int] = None,
                out: Path = Path("out/run"), h_list: Optional[Sequence[float]] = None,
                methods: Optional[Sequence[str]] = None, n_mc: Optional[int] = None,
                scaling: Optional[str] = None) -> RunResult:
        result, start = RunResult(command="privacy"), RunResult.start_timer()
        scenario, resolved = load_privacy_scenario(scenario_source, scaling_rule=scaling,
                                                   cfg=self.cfg)
        periods = self._privacy_periods(scenario, h_list)
        rows, settings = self._run_privacy(scenario, periods, seed, methods, n_mc, result)

        result.output_files.append(
            write_table(self._privacy_frame(rows), output_path(out, "_privacy.csv")))
        result.output_files.append(write_envelope(
            self._envelope("privacy", {"scenario": resolved, **settings},
                           {"base_seed": settings["seed"]}, self._privacy_payload(rows)),
            output_path(out, "_privacy.json")))
        result.summary = {"scenario": scenario.name, "rule": scenario.scaling.kind,
                          "rows": len(rows), "methods": ", ".join(settings["methods"])}
        return self._finish(result, start)

    def tradeoff(self, *, config_path: Optional[Path] = None,
                 scenario_source: Optional[str] = None, seed: Optional[int] = None,
                 out: Path = Path("out/run"), h_list: Optional[Sequence[float]] = None,
                 trials: Optional[int] = None, methods: Optional[Sequence[str]] = None,
                 n_mc: Optional[int] = None, scaling: Optional[str] = None) -> RunResult:
        """Mean tracking error and privacy side by side, one row per shared period."""
        result, start = RunResult(command="tradeoff"), RunResult.start_timer()
        sim_scenario, sim_resolved = self._simulation_config(
            config_path, seed=seed, overrides=self._sweep_overrides(h_list, trials))
        privacy_scenario, privacy_resolved = load_privacy_scenario(
            scenario_source, scaling_rule=scaling, cfg=self.cfg)

        shared = [float(h) for h in sim_resolved["sweep"]["h_list"]]
        usable = self._usable_privacy_periods(privacy_scenario, shared)
        sweep = self._run_sweep(sim_scenario, sim_resolved, include_uncontrolled=False)
        rows, settings = self._run_privacy(privacy_scenario, usable, seed, methods, n_mc, result)

        sweep_frame, privacy_frame = self._sweep_frame(sweep), self._privacy_frame(rows)
        joined = sweep_frame.merge(privacy_frame, on="h_min", how="inner", sort=True)
        dropped = sorted(set(sweep_frame["h_min"]) ^ set(privacy_frame["h_min"]))
        for h in dropped:
            message = f"h={h:g} is only available on one side; row excluded"
            logger.warning(message)
            result.warnings.append(message)

        result.output_files.append(write_table(joined, output_path(out, "_tradeoff.csv")))
        result.output_files.append(write_envelope(
            self._envelope(
                "tradeoff",
                {"simulation": sim_resolved, "privacy": {"scenario": privacy_resolved, **settings}},
                {"base_seed": sim_scenario.seed, "privacy_seed": settings["seed"]},
                {"rows": joined.to_dict(orient="records"), "excluded_h": dropped,
                 "spearman_rho": sweep.spearman_rho, "spearman_p": sweep.spearman_p}),
            output_path(out, "_tradeoff.json")))
        result.summary = {"rows": len(joined), "excluded": len(dropped)}
        return self._finish(result, start)

    # ------------------------------------------------------------------
    # Configuration helpers
    # ------------------------------------------------------------------
    def _simulation_config(self, config_path: Optional[Path], *, seed: Optional[int] = None,
                           overrides: Optional[Dict[Tuple[str, str], Any]] = None,
                           ) -> Tuple[ScenarioConfig, Dict[str, Any]]:
        scenario, resolved = load_simulation_config(config_path, cfg=self.cfg)
        changes = dict(overrides or {})
        if seed is not None:
            changes[("seeds", "base_seed")] = seed
        if not changes:
            return scenario, resolved
        resolved = copy.deepcopy(resolved)
        for (section, key), value in changes.items():
            resolved[section][key] = value
        return build_scenario(resolved), resolved

    @staticmethod
    def _sweep_overrides(h_list: Optional[Sequence[float]],
                         trials: Optional[int]) -> Dict[Tuple[str, str], Any]:
        overrides: Dict[Tuple[str, str], Any] = {}
        if h_list is not None:
            overrides[("sweep", "h_list")] = [float(h) for h in h_list]
        if trials is not None:
            overrides[("sweep", "trials")] = int(trials)
        return overrides

    def _privacy_periods(self, scenario: PrivacyScenario,
                         h_list: Optional[Sequence[float]]) -> List[float]:
        if h_list is not None:
            return [float(h) for h in h_list]
        if scenario.scaling.kind == "explicit-table":
            return sorted(scenario.scaling.table)
        return [float(h) for h in self.cfg.PRIVACY_H_LIST if h <= scenario.window]

    def _usable_privacy_periods(self, scenario: PrivacyScenario,
                                periods: Sequence[float]) -> List[float]:
        usable = []
        for h in periods:
            try:
                samples_in_window(h, scenario.window)
            except ConfigurationError:
                continue
            if scenario.scaling.kind == "explicit-table" and not any(
                    abs(h - period) <= 1e-9 for period in scenario.scaling.table):
                continue
            usable.append(h)
        return usable

    # ------------------------------------------------------------------
    # Computation wrappers
    # ------------------------------------------------------------------
    def _run_sweep(self, scenario: ScenarioConfig, resolved: Dict[str, Any],
                   include_uncontrolled: bool) -> SweepResult:
        h_list, trials = resolved["sweep"]["h_list"], resolved["sweep"]["trials"]
        logger.info("📊 Sweeping h=%s with %d trials each on %d worker(s)",
                    ", ".join(f"{h:g}" for h in h_list), trials, self.threads)
        sweep = run_sweep(scenario, h_list, trials, scenario.seed, threads=self.threads,
                          include_uncontrolled=include_uncontrolled, progress=self.progress)
        logger.info("🌡️  %d TCL-trials peaked further outside the deadband than their "
                    "uncontrolled twin", sweep.comfort_violations)
        return sweep

    def _run_privacy(self, scenario: PrivacyScenario, periods: Sequence[float],
                     seed: Optional[int], methods: Optional[Sequence[str]],
                     n_mc: Optional[int], result: RunResult
                     ) -> Tuple[List[PrivacyRow], Dict[str, Any]]:
        settings = {
            "h_list": [float(h) for h in periods],
            "methods": list(methods or DEFAULT_PRIVACY_METHODS),
            "n_mc": int(n_mc if n_mc is not None else self.cfg.PRIVACY_N_MC),
            "seed": int(seed if seed is not None else self.cfg.BASE_SEED),
        }
        logger.info("🔐 Privacy of '%s' (%s rule) at %d periods", scenario.name,
                    scenario.scaling.kind, len(periods))
        rows = privacy_sweep(scenario, settings["h_list"], settings["methods"],
                             settings["n_mc"], settings["seed"], threads=self.threads,
                             progress=self.progress)
        for row in rows:
            result.warnings.extend(f"h={row.h:g}: {note}" for note in row.notes)
        return rows, settings

    # ------------------------------------------------------------------
    # Tables and payloads
    # ------------------------------------------------------------------
    @staticmethod
    def _trajectory_frame(trial: TrialResult) -> pd.DataFrame:
        return pd.DataFrame({
            "step": np.arange(len(trial.minutes), dtype=np.int64),
            "minute": trial.minutes,
            "p_actual_kw": trial.p_actual,
            "p_desired_kw": trial.p_desired,
            "n_on": trial.n_on.astype(np.int64),
        }, columns=TRAJECTORY_COLUMNS)

    @staticmethod
    def _trace_frame(trial: TrialResult) -> pd.DataFrame:
        trace = trial.trace
        n = len(trial.minutes)
        return pd.DataFrame({
            "step": np.arange(n, dtype=np.int64),
            "minute": trial.minutes,
            "theta_c": trace.theta,
            "mode": trace.mode.astype(np.int64),
            "commanded": trace.commanded.astype(np.int64),
            "deadband_low": np.full(n, trace.deadband_low),
            "deadband_high": np.full(n, trace.deadband_high),
        }, columns=TRACE_COLUMNS)

    @staticmethod
    def _trial_payload(trial: TrialResult) -> Dict[str, Any]:
        payload = {
            "l1_mw": trial.l1,
            "l2_mw": trial.l2,
            "rms_mw": trial.rms,
            "forced_toggles": int(trial.forced_toggles.sum()),
            "max_forced_toggles_per_tcl": int(trial.forced_toggles.max()),
            "guarded_toggles": trial.guarded_toggles,
            "comfort_violations": trial.comfort_violations,
            "max_excursion_c": float(trial.max_excursion.max()),
            "mean_n_on": float(trial.n_on.mean()),
        }
        if trial.max_excursion_uncontrolled is not None:
            payload["max_excursion_uncontrolled_c"] = float(trial.max_excursion_uncontrolled.max())
        return payload

    @staticmethod
    def _sweep_frame(sweep: SweepResult) -> pd.DataFrame:
        records = [{
            "h_min": row.h_obs,
            "n_trials": row.stats.n,
            "mean_l1_mw": row.stats.mean,
            "stderr_mw": row.stats.stderr,
            "q1": row.stats.q1,
            "median": row.stats.median,
            "q3": row.stats.q3,
            "lo_whisker": row.stats.lo_whisker,
            "hi_whisker": row.stats.hi_whisker,
        } for row in sorted(sweep.rows, key=lambda r: r.h_obs)]
        frame = pd.DataFrame.from_records(records, columns=SWEEP_COLUMNS)
        return frame.astype({"h_min": float, "n_trials": np.int64})

    @staticmethod
    def _sweep_payload(sweep: SweepResult, include_uncontrolled: bool) -> Dict[str, Any]:
        return {
            "rows": [{
                "h_min": row.h_obs,
                "control_enabled": row.control_enabled,
                "n_trials": row.stats.n,
                "mean_l1_mw": row.stats.mean,
                "stderr_mw": row.stats.stderr,
                "q1": row.stats.q1,
                "median": row.stats.median,
                "q3": row.stats.q3,
                "lo_whisker": row.stats.lo_whisker,
                "hi_whisker": row.stats.hi_whisker,
                "outliers": list(row.stats.outliers),
            } for row in sweep.rows],
            "trial_l1_mw": {f"{h:g}": values for h, values in sweep.trial_l1.items()},
            "spearman_rho": sweep.spearman_rho,
            "spearman_p": sweep.spearman_p,
            "comfort_violations": sweep.comfort_violations,
            "include_uncontrolled": include_uncontrolled,
        }

    @staticmethod
    def _privacy_frame(rows: Sequence[PrivacyRow]) -> pd.DataFrame:
        records = [{
            "h_min": row.h,
            "T": row.T,
            "alpha_map_exact": row.alpha_map_exact,
            "alpha_map_mc": row.alpha_map_mc,
            "mc_stderr": row.mc_stderr,
            "alpha_lecam_pinsker": row.alpha_lecam_pinsker,
            "alpha_lecam_tv": row.alpha_lecam_tv,
            "alpha_fano": row.alpha_fano,
        } for row in rows]
        frame = pd.DataFrame.from_records(records, columns=PRIVACY_COLUMNS)
        dtypes = {column: float for column in PRIVACY_COLUMNS}
        dtypes["T"] = np.int64
        return frame.astype(dtypes)

    @staticmethod
    def _privacy_payload(rows: Sequence[PrivacyRow]) -> Dict[str, Any]:
        return {"rows": [{
            "h_min": row.h, "T": row.T,
            "alpha_map_exact": row.alpha_map_exact,
            "alpha_map_mc": row.alpha_map_mc,
            "mc_stderr": row.mc_stderr,
            "alpha_lecam_pinsker": row.alpha_lecam_pinsker,
            "alpha_lecam_tv": row.alpha_lecam_tv,
            "alpha_fano": row.alpha_fano,
            "notes": list(row.notes),
        } for row in rows]}

    @staticmethod
    def _envelope(command: str, resolved: Dict[str, Any], seeds: Dict[str, Any],
                  results: Dict[str, Any]) -> ResultEnvelope:
        return ResultEnvelope(tool_version=__version__, command=command,
                              resolved_config=resolved, seeds=seeds, results=results)

    @staticmethod
    def _finish(result: RunResult, start: float) -> RunResult:
        result.stop_timer(start)
        result.success = bool(result.output_files)
        logger.info("💾 %s wrote %d file(s) in %.2f s", result.command,
                    len(result.output_files), result.processing_time)
        return result
