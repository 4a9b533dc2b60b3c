"""Inferential privacy of meter data: MAP error, Le Cam and Fano bounds.

All divergences are in nats. A family "shares its scale" when every component
of every type has the same sigma; in that case ``S = sum(ln y_t)`` is a
sufficient statistic and the MAP error and the T-sample TV distance have
closed forms.
"""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from src.config import ERROR_MESSAGES

from ..model import (
    BoundResult,
    ConfigurationError,
    NumericalError,
    ObservationFamily,
    RngStreamPlan,
    TypePrior,
    UnsupportedCaseError,
)

__all__ = [
    "kl_lognormal_shared_scale",
    "kl_lognormal",
    "kl_iid",
    "tv_pinsker",
    "tv_exact_shared_scale",
    "kl_matrix",
    "tv_matrix",
    "lecam_bound",
    "fano_bound",
    "map_classify",
    "map_error_exact_shared_scale",
    "map_error_monte_carlo",
]

logger = logging.getLogger(__name__)

MC_CHUNK_SIZE = 100_000


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise ConfigurationError(ERROR_MESSAGES["NONPOSITIVE"].format("sigma", sigma),
                                 field="sigma")


def kl_lognormal_shared_scale(mu_i: float, mu_j: float, sigma: float) -> float:
    """KL between two log-normals with the same scale: ``(mu_i - mu_j)^2 / (2 sigma^2)``."""
    _check_sigma(sigma)
    return (mu_i - mu_j) ** 2 / (2.0 * sigma ** 2)


def kl_lognormal(mu_i: float, sigma_i: float, mu_j: float, sigma_j: float) -> float:
    """KL(lnN(mu_i, sigma_i^2) || lnN(mu_j, sigma_j^2)) for arbitrary scales."""
    _check_sigma(sigma_i)
    _check_sigma(sigma_j)
    return (math.log(sigma_j / sigma_i)
            + (sigma_i ** 2 + (mu_i - mu_j) ** 2) / (2.0 * sigma_j ** 2) - 0.5)


def kl_iid(kl_per_sample, T: int):
    """KL of T i.i.d. samples; works elementwise on arrays."""
    if T < 0:
        raise ConfigurationError(ERROR_MESSAGES["OUT_OF_RANGE"].format("T", ">= 0", T), field="T")
    return T * kl_per_sample


def tv_pinsker(kl):
    """Pinsker's upper bound ``min(1, sqrt(kl / 2))``; works elementwise on arrays."""
    bound = np.minimum(1.0, np.sqrt(np.maximum(kl, 0.0) / 2.0))
    return float(bound) if np.ndim(bound) == 0 else bound


def tv_exact_shared_scale(mu_i: float, mu_j: float, sigma: float, T: int) -> float:
    """TV between the T-sample laws, via ``S ~ N(T mu, T sigma^2)``."""
    _check_sigma(sigma)
    if T < 1:
        return 0.0
    z = math.sqrt(T) * abs(mu_i - mu_j) / (2.0 * sigma)
    # 2*Phi(z) - 1 written with erf keeps precision for small z
    return min(1.0, max(0.0, math.erf(z / math.sqrt(2.0))))


def _require_point_mass(family: ObservationFamily, what: str) -> None:
    if not family.is_point_mass:
        raise UnsupportedCaseError(ERROR_MESSAGES["UNSUPPORTED"].format(
            f"{what} needs one log-normal component per type"))


def kl_matrix(family: ObservationFamily, T: int = 1) -> np.ndarray:
    """Pairwise KL between the T-sample laws of a point-mass family."""
    _require_point_mass(family, "closed-form KL")
    params = [(mixture[0].mu, mixture[0].sigma) for mixture in family.components]
    r = family.r
    matrix = np.zeros((r, r))
    for i in range(r):
        for j in range(r):
            if i != j:
                mu_i, sigma_i = params[i]
                mu_j, sigma_j = params[j]
                if sigma_i == sigma_j:
                    kl = kl_lognormal_shared_scale(mu_i, mu_j, sigma_i)
                else:
                    kl = kl_lognormal(mu_i, sigma_i, mu_j, sigma_j)
                matrix[i, j] = kl_iid(kl, T)
    return matrix


def tv_matrix(family: ObservationFamily, T: int = 1, method: str = "pinsker") -> np.ndarray:
    """Pairwise TV of the T-sample laws, exact (shared scale) or through Pinsker.

    The Pinsker matrix is symmetrised with the smaller of the two directed KLs.
    """
    if method == "pinsker":
        kl = kl_matrix(family, T)
        return tv_pinsker(np.minimum(kl, kl.T))
    if method == "exact":
        _require_point_mass(family, "exact TV")
        if not family.shared_scale:
            raise UnsupportedCaseError(ERROR_MESSAGES["UNSUPPORTED"].format(
                "exact TV needs a shared scale"))
        mu, sigma = family.locations, family.sigma
        r = family.r
        matrix = np.zeros((r, r))
        for i in range(r):
            for j in range(i + 1, r):
                matrix[i, j] = matrix[j, i] = tv_exact_shared_scale(mu[i], mu[j], sigma, T)
        return matrix
    raise ConfigurationError(f"unknown TV method '{method}'", field="method")


def lecam_bound(prior: TypePrior, tv: np.ndarray, method: str = "lecam-pinsker") -> BoundResult:
    """``max_{i != j} min(pi_i, pi_j) * (1 - TV_ij)``; the maximising pair goes in diagnostics."""
    tv = np.asarray(tv, dtype=float)
    r = prior.r
    if r < 2:
        raise ConfigurationError("Le Cam's bound needs at least two types", field="prior")
    if tv.shape != (r, r):
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("tv_matrix", tv.shape[0], r),
            field="tv_matrix")
    if np.any(tv < 0) or np.any(tv > 1) or not np.allclose(tv, tv.T):
        raise ConfigurationError("TV matrix must be symmetric with entries in [0, 1]",
                                 field="tv_matrix")
    pi = prior.array
    best, pair = -1.0, (0, 1)
    for i in range(r):
        for j in range(i + 1, r):
            value = min(pi[i], pi[j]) * (1.0 - tv[i, j])
            if value > best:
                best, pair = value, (i, j)
    return BoundResult(
        alpha=min(1.0, max(0.0, best)), method=method,
        diagnostics={
            "pair": [prior.labels[pair[0]], prior.labels[pair[1]]],
            "tv_matrix": tv.tolist(),
        })


def fano_bound(kl: np.ndarray, r: int, prior: Optional[TypePrior] = None) -> BoundResult:
    """``[ln r - (1/r^2) sum_ij KL_ij - ln 2] / ln(r - 1)`` clamped to [0, 1].

    The bound assumes uniformly distributed types; with a non-uniform
    ``prior`` it is still reported, flagged in the diagnostics.
    """
    if r == 2:
        raise UnsupportedCaseError(ERROR_MESSAGES["UNSUPPORTED"].format(
            "Fano's bound divides by ln(r - 1) = 0 for r = 2"))
    if r < 2:
        raise ConfigurationError("Fano's bound needs at least three types", field="prior")
    kl = np.asarray(kl, dtype=float)
    if kl.shape != (r, r):
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("kl_matrix", kl.shape[0], r),
            field="kl_matrix")
    if np.any(kl < 0) or np.any(np.diag(kl) != 0):
        raise ConfigurationError("KL matrix must be non-negative with a zero diagonal",
                                 field="kl_matrix")
    kl_sum = float(kl.sum())
    raw = (math.log(r) - kl_sum / r ** 2 - math.log(2.0)) / math.log(r - 1)
    if not math.isfinite(raw):
        raise NumericalError(f"Fano's bound is not finite (sum KL = {kl_sum})")
    diagnostics = {
        "kl_sum": kl_sum,
        "unclamped": raw,
        "clamped": raw < 0.0 or raw > 1.0,
        "kl_matrix": kl.tolist(),
    }
    if prior is not None:
        diagnostics["fano_prior_uniform"] = prior.is_uniform()
    return BoundResult(alpha=min(1.0, max(0.0, raw)), method="fano", diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# MAP classification
# ---------------------------------------------------------------------------

def _flat_components(family: ObservationFamily) -> Tuple[np.ndarray, np.ndarray, np.ndarray,
                                                        List[slice]]:
    weights, mus, sigmas, slices = [], [], [], []
    for mixture in family.components:
        start = len(mus)
        for c in mixture:
            weights.append(c.weight)
            mus.append(c.mu)
            sigmas.append(c.sigma)
        slices.append(slice(start, len(mus)))
    return np.array(weights), np.array(mus), np.array(sigmas), slices


def _log_prior(prior: TypePrior) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(prior.array)


def _map_indices(prior: TypePrior, family: ObservationFamily, T: int,
                 sq_dev: np.ndarray) -> np.ndarray:
    """MAP type per row from ``sq_dev[n, j] = sum_t (ln y_t - mu_j)^2``.

    Terms shared by every component (``-sum ln y_t`` and the ``2 pi``
    constant) are dropped. ``argmax`` returns the first maximum, so ties go
    to the lowest type index.
    """
    weights, _mus, sigmas, slices = _flat_components(family)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    log_comp = log_w - T * np.log(sigmas) - sq_dev / (2.0 * sigmas ** 2)
    scores = np.column_stack([special.logsumexp(log_comp[:, s], axis=1) for s in slices])
    scores = scores + _log_prior(prior)
    return np.argmax(scores, axis=1)


def map_classify(prior: TypePrior, family: ObservationFamily, y: Sequence[float]) -> str:
    """MAP type label for one observation vector ``y`` (strictly positive readings)."""
    if family.r != prior.r:
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("family", family.r, prior.r), field="family")
    y = np.asarray(y, dtype=float).ravel()
    if np.any(~(y > 0)):
        raise ConfigurationError("meter readings must be strictly positive", field="y")
    log_y = np.log(y)
    _w, mus, _s, _slices = _flat_components(family)
    sq_dev = ((log_y[:, None] - mus[None, :]) ** 2).sum(axis=0)[None, :]
    return prior.labels[int(_map_indices(prior, family, y.size, sq_dev)[0])]


def _prior_only_error(prior: TypePrior) -> float:
    return float(1.0 - prior.array.max())


def map_error_exact_shared_scale(prior: TypePrior, locations: Sequence[float], sigma: float,
                                 T: int) -> BoundResult:
    """Exact MAP error for a shared-scale, one-component-per-type family.

    The MAP rule on ``S`` picks the largest of the lines
    ``ln pi_i + S mu_i / sigma^2 - T mu_i^2 / (2 sigma^2)``, so its regions are
    the intervals of their upper envelope. Types whose line never reaches the
    envelope (and duplicates of a location, which lose to the larger prior or
    the lower index) are never chosen and are always in error.
    """
    _check_sigma(sigma)
    mu = np.asarray(locations, dtype=float)
    if mu.shape != (prior.r,):
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("locations", mu.size, prior.r),
            field="locations")
    if T < 0:
        raise ConfigurationError(ERROR_MESSAGES["OUT_OF_RANGE"].format("T", ">= 0", T), field="T")
    if T == 0:
        return BoundResult(alpha=_prior_only_error(prior), method="map-exact",
                           diagnostics={"T": 0, "regions": {}})

    pi = prior.array
    log_pi = _log_prior(prior)
    # one candidate per distinct location: larger prior wins, then lower index
    candidates = {}
    for i in np.argsort(mu, kind="stable"):
        if pi[i] <= 0:
            continue
        key = float(mu[i])
        if key not in candidates or pi[i] > pi[candidates[key]]:
            candidates[key] = int(i)
    order = sorted(candidates.values(), key=lambda i: mu[i])
    slope = mu / sigma ** 2
    intercept = log_pi - T * mu ** 2 / (2.0 * sigma ** 2)

    def crossing(i: int, j: int) -> float:
        return (intercept[i] - intercept[j]) / (slope[j] - slope[i])

    hull: List[int] = []
    for k in order:
        while len(hull) >= 2 and crossing(hull[-2], k) <= crossing(hull[-2], hull[-1]):
            hull.pop()
        hull.append(k)

    error = np.ones(prior.r)
    regions = {}
    sd = math.sqrt(T) * sigma
    for position, i in enumerate(hull):
        lo = crossing(hull[position - 1], i) if position > 0 else -math.inf
        hi = crossing(i, hull[position + 1]) if position < len(hull) - 1 else math.inf
        centre = T * mu[i]
        error[i] = (stats.norm.cdf((lo - centre) / sd) + stats.norm.sf((hi - centre) / sd))
        regions[prior.labels[i]] = [lo, hi]
    alpha = float(np.clip(np.dot(pi, error), 0.0, 1.0))
    never_chosen = [prior.labels[i] for i in range(prior.r) if i not in hull]
    if never_chosen:
        logger.debug("MAP never selects %s at T=%d", never_chosen, T)
    return BoundResult(alpha=alpha, method="map-exact",
                       diagnostics={"T": T, "regions": regions, "never_chosen": never_chosen,
                                    "per_type_error": error.tolist()})


def _mc_chunk(prior: TypePrior, family: ObservationFamily, T: int, n: int,
              rng: np.random.Generator) -> int:
    """Misclassification count of ``n`` simulated consumers.

    Only the sufficient statistics are drawn: with ``z_t`` standard normal,
    ``Z = sum z_t`` and ``Q = sum z_t^2 = Z^2/T + chi2(T-1)``, and for the
    drawn component ``(mu0, sigma0)`` the squared deviation from any
    location ``mu`` is ``T d^2 + 2 d sigma0 Z + sigma0^2 Q`` with ``d = mu0 - mu``.
    """
    weights, mus, sigmas, slices = _flat_components(family)
    types = rng.choice(prior.r, size=n, p=prior.array)
    u = rng.random(n)
    component = np.empty(n, dtype=np.int64)
    for i, s in enumerate(slices):
        rows = types == i
        cumulative = np.cumsum(weights[s])
        picks = np.searchsorted(cumulative, u[rows] * cumulative[-1], side="right")
        component[rows] = s.start + np.minimum(picks, s.stop - s.start - 1)
    z_sum = math.sqrt(T) * rng.standard_normal(n)
    q = z_sum ** 2 / T
    if T > 1:
        q = q + rng.chisquare(T - 1, size=n)
    mu0, sigma0 = mus[component], sigmas[component]
    d = mu0[:, None] - mus[None, :]
    sq_dev = T * d ** 2 + 2.0 * d * (sigma0 * z_sum)[:, None] + (sigma0 ** 2 * q)[:, None]
    return int(np.count_nonzero(_map_indices(prior, family, T, sq_dev) != types))


def map_error_monte_carlo(prior: TypePrior, family: ObservationFamily, T: int, n_mc: int,
                          stream: Union[np.random.Generator, RngStreamPlan],
                          *, chunk_size: int = MC_CHUNK_SIZE,
                          stream_key: Tuple[int, ...] = ()) -> BoundResult:
    """Monte Carlo MAP error with its binomial standard error.

    With an :class:`RngStreamPlan`, chunk ``c`` draws from the
    ``privacy-mc`` substream keyed by ``(*stream_key, c)``; with a generator,
    chunks draw from it in order.
    """
    if int(n_mc) != n_mc or n_mc < 1:
        raise ConfigurationError(ERROR_MESSAGES["NONPOSITIVE"].format("n_mc", n_mc), field="n_mc")
    if family.r != prior.r:
        raise ConfigurationError(
            ERROR_MESSAGES["LENGTH_MISMATCH"].format("family", family.r, prior.r), field="family")
    if T < 0:
        raise ConfigurationError(ERROR_MESSAGES["OUT_OF_RANGE"].format("T", ">= 0", T), field="T")
    if T == 0:
        return BoundResult(alpha=_prior_only_error(prior), method="map-mc", stderr=0.0,
                           diagnostics={"n_mc": int(n_mc), "T": 0})

    errors, done, chunk = 0, 0, 0
    while done < n_mc:
        n = min(chunk_size, n_mc - done)
        if isinstance(stream, RngStreamPlan):
            rng = stream.stream("privacy-mc", *stream_key, chunk)
        else:
            rng = stream
        errors += _mc_chunk(prior, family, T, n, rng)
        done += n
        chunk += 1
    alpha = errors / n_mc
    stderr = math.sqrt(alpha * (1.0 - alpha) / n_mc)
    return BoundResult(alpha=alpha, method="map-mc", stderr=stderr,
                       diagnostics={"n_mc": int(n_mc), "T": T, "errors": errors,
                                    "chunks": chunk})
