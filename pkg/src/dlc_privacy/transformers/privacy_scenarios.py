"""Per-period parameter scaling, the alpha-versus-h sweep and log-normal fitting."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.config import DEFAULT_PRIVACY_METHODS, ERROR_MESSAGES, PRIVACY_METHODS

from ..model import (
    ConfigurationError,
    ObservationFamily,
    PrivacyRow,
    PrivacyScenario,
    RngStreamPlan,
    ScalingRule,
    UnsupportedCaseError,
)
from .privacy_bounds import (
    fano_bound,
    kl_matrix,
    lecam_bound,
    map_error_exact_shared_scale,
    map_error_monte_carlo,
    tv_matrix,
)

__all__ = [
    "scale_parameters",
    "samples_in_window",
    "privacy_row",
    "privacy_sweep",
    "fit_lognormal_shared_scale",
    "sample_synthetic_groups",
]

logger = logging.getLogger(__name__)

TABLE_TOLERANCE = 1e-9
MC_KEY_RESOLUTION = 1000  # h in thousandths of a minute


def samples_in_window(h: float, window: float) -> int:
    if not h > 0:
        raise ConfigurationError(ERROR_MESSAGES["NONPOSITIVE"].format("h", h), field="h_list")
    if h > window:
        raise ConfigurationError(
            ERROR_MESSAGES["OUT_OF_RANGE"].format("h", f"(0, window={window:g}]", h),
            field="h_list")
    # guard against 60/0.1 style rounding just below an integer
    return int(math.floor(window / h + 1e-9))


def _table_row(rule: ScalingRule, h: float) -> Tuple[Tuple[float, ...], float]:
    for period, row in rule.table.items():
        if abs(float(period) - h) <= TABLE_TOLERANCE:
            return row
    raise ConfigurationError(ERROR_MESSAGES["MISSING_TABLE_ROW"].format(f"{h:g}"),
                             field="scaling.table")


def scale_parameters(family: ObservationFamily, rule: ScalingRule, h: float, window: float,
                     minutes_per_year: float = 525_600.0) -> Tuple[ObservationFamily, int]:
    """Per-sample family at period ``h`` and the number of samples in the window.

    ``location-shift`` rescales the annual total ``X`` to ``X / c`` with
    ``c = minutes_per_year / h``, which for a log-normal only moves every
    location by ``-ln c``. ``explicit-table`` replaces the family with the
    tabulated per-type locations and scale.
    """
    T = samples_in_window(h, window)
    if rule.kind == "location-shift":
        return family.shifted(-math.log(minutes_per_year / h)), T
    locations, sigma = _table_row(rule, h)
    return ObservationFamily.point_mass(locations, sigma), T


def _validate_methods(methods: Sequence[str]) -> Tuple[str, ...]:
    unknown = [m for m in methods if m not in PRIVACY_METHODS]
    if unknown:
        raise ConfigurationError(
            f"unknown privacy method(s) {unknown}; choose from {list(PRIVACY_METHODS)}",
            field="methods")
    return tuple(methods)


def privacy_row(scenario: PrivacyScenario, h: float,
                methods: Sequence[str] = DEFAULT_PRIVACY_METHODS,
                n_mc: int = 100_000, seed: int = 0) -> PrivacyRow:
    """Evaluate every requested method at one period.

    A method that does not apply to the scaled family leaves its cell empty
    and adds a note; other methods are unaffected.
    """
    methods = _validate_methods(methods)
    family, T = scale_parameters(scenario.family, scenario.scaling, h, scenario.window,
                                 scenario.minutes_per_year)
    prior = scenario.prior
    row = PrivacyRow(h=float(h), T=T)

    def attempt(method: str, compute) -> None:
        if method not in methods:
            return
        try:
            compute()
        except UnsupportedCaseError as exc:
            row.notes.append(f"{method}: {exc}")
            logger.warning("h=%g: %s skipped (%s)", h, method, exc)

    def exact() -> None:
        if not (family.is_point_mass and family.shared_scale):
            raise UnsupportedCaseError(ERROR_MESSAGES["UNSUPPORTED"].format(
                "exact MAP needs a shared-scale family with one component per type"))
        row.alpha_map_exact = map_error_exact_shared_scale(
            prior, family.locations, family.sigma, T).alpha

    def monte_carlo() -> None:
        result = map_error_monte_carlo(prior, family, T, n_mc, RngStreamPlan(seed),
                                       stream_key=(int(round(h * MC_KEY_RESOLUTION)),))
        row.alpha_map_mc, row.mc_stderr = result.alpha, result.stderr

    def pinsker() -> None:
        row.alpha_lecam_pinsker = lecam_bound(
            prior, tv_matrix(family, T, "pinsker"), "lecam-pinsker").alpha

    def exact_tv() -> None:
        row.alpha_lecam_tv = lecam_bound(
            prior, tv_matrix(family, T, "exact"), "lecam-exact-tv").alpha

    def fano() -> None:
        row.alpha_fano = fano_bound(kl_matrix(family, T), prior.r, prior).alpha

    attempt("map-exact", exact)
    attempt("map-mc", monte_carlo)
    attempt("lecam-pinsker", pinsker)
    attempt("lecam-exact-tv", exact_tv)
    attempt("fano", fano)
    return row


def _privacy_worker(task: tuple) -> PrivacyRow:
    return privacy_row(*task)


def privacy_sweep(scenario: PrivacyScenario, h_list: Sequence[float],
                  methods: Sequence[str] = DEFAULT_PRIVACY_METHODS, n_mc: int = 100_000,
                  seed: int = 0, *, threads: int = 1, progress: bool = False) -> List[PrivacyRow]:
    """One :class:`PrivacyRow` per distinct period, ascending in ``h``."""
    methods = _validate_methods(methods)
    periods = sorted(set(float(h) for h in h_list))
    if not periods:
        raise ConfigurationError("h_list must not be empty", field="h_list")
    tasks = [(scenario, h, methods, n_mc, seed) for h in periods]
    if threads <= 1:
        rows = [_privacy_worker(t) for t in tqdm(tasks, desc="periods", disable=not progress)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            rows = list(tqdm(executor.map(_privacy_worker, tasks), total=len(tasks),
                             desc="periods", disable=not progress))
    logger.info("Evaluated %d periods with methods %s", len(rows), ", ".join(methods))
    return rows


def fit_lognormal_shared_scale(groups: Sequence[Sequence[float]]) -> Tuple[Tuple[float, ...], float]:
    """Per-group log-mean and pooled log-scale.

    The pooled variance divides the within-group sum of squares of the logs
    by ``n - r`` (``n`` samples in ``r`` groups), the unbiased estimator
    under a common scale.
    """
    if not groups:
        raise ConfigurationError("at least one group is required", field="groups")
    means, sum_sq, n_total = [], 0.0, 0
    for index, group in enumerate(groups):
        values = np.asarray(group, dtype=float).ravel()
        if values.size < 2:
            raise ConfigurationError(f"group {index} needs at least two samples",
                                     field="groups")
        if np.any(~(values > 0)):
            raise ConfigurationError(f"group {index} has a nonpositive sample", field="groups")
        logs = np.log(values)
        mean = float(logs.mean())
        means.append(mean)
        sum_sq += float(np.sum((logs - mean) ** 2))
        n_total += values.size
    sigma = math.sqrt(sum_sq / (n_total - len(groups)))
    return tuple(means), sigma


def sample_synthetic_groups(family: ObservationFamily, n_per_type: int,
                            stream: np.random.Generator) -> List[np.ndarray]:
    """``n_per_type`` positive readings per type, one mixture component per reading.

    Draws come from ``stream`` only, e.g. ``RngStreamPlan(seed).stream("privacy-mc")``.
    """
    if n_per_type < 1:
        raise ConfigurationError(ERROR_MESSAGES["NONPOSITIVE"].format("n_per_type", n_per_type),
                                 field="n_per_type")
    groups = []
    for mixture in family.components:
        weights = np.array([c.weight for c in mixture])
        picks = stream.choice(len(mixture), size=n_per_type, p=weights / weights.sum())
        mu = np.array([c.mu for c in mixture])[picks]
        sigma = np.array([c.sigma for c in mixture])[picks]
        groups.append(stream.lognormal(mean=mu, sigma=sigma))
    return groups
