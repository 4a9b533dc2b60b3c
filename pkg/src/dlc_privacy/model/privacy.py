"""Types of the hierarchical Bayes consumption model.

A consumer's private type is drawn from :class:`TypePrior`; given the type, a
usage component is drawn once, and then every meter reading is an independent
log-normal draw with that component's location and scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import ERROR_MESSAGES

from .errors import ConfigurationError

__all__ = [
    "TypePrior",
    "LogNormalComponent",
    "ObservationFamily",
    "ScalingRule",
    "PrivacyScenario",
    "BoundResult",
    "PrivacyRow",
    "BOUND_METHODS",
]

BOUND_METHODS = ("map-exact", "map-mc", "lecam-exact-tv", "lecam-pinsker", "fano")
PRIOR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TypePrior:
    """Finite set of private types and their prior probabilities.

    Weights are normalised on construction, so population counts such as
    ``(23.7, 48.7, 41.2)`` can be given directly.
    """

    labels: Tuple[str, ...]
    pi: Tuple[float, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        weights = np.asarray(self.pi, dtype=float)
        if len(labels) < 2:
            raise ConfigurationError("at least two private types are required",
                                     field="prior.labels")
        if weights.shape != (len(labels),):
            raise ConfigurationError(
                ERROR_MESSAGES["LENGTH_MISMATCH"].format("prior.pi", weights.size, len(labels)),
                field="prior.pi")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)) or weights.sum() <= 0:
            raise ConfigurationError("prior weights must be finite, non-negative and not all zero",
                                     field="prior.pi")
        normalised = weights / weights.sum()
        if abs(normalised.sum() - 1.0) > PRIOR_TOLERANCE:
            normalised = normalised / normalised.sum()
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "pi", tuple(float(p) for p in normalised))

    @property
    def r(self) -> int:
        return len(self.labels)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.pi, dtype=float)

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return max(self.pi) - min(self.pi) <= tol


@dataclass(frozen=True)
class LogNormalComponent:
    """One usage component: ``ln y ~ Normal(mu, sigma^2)`` with mixture weight."""

    weight: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("sigma", self.sigma), field="family.sigma")
        if not (self.weight >= 0 and math.isfinite(self.mu)):
            raise ConfigurationError("component weight must be >= 0 and mu finite",
                                     field="family.weight")


@dataclass(frozen=True)
class ObservationFamily:
    """Per-type finite mixture of log-normal components."""

    components: Tuple[Tuple[LogNormalComponent, ...], ...]

    def __post_init__(self) -> None:
        normalised = []
        for index, mixture in enumerate(self.components):
            mixture = tuple(mixture)
            if not mixture:
                raise ConfigurationError(f"type {index} has no components",
                                         field="family.components")
            total = sum(c.weight for c in mixture)
            if total <= 0:
                raise ConfigurationError(f"type {index} has zero total weight",
                                         field="family.components")
            normalised.append(tuple(
                LogNormalComponent(c.weight / total, c.mu, c.sigma) for c in mixture))
        object.__setattr__(self, "components", tuple(normalised))

    @classmethod
    def point_mass(cls, locations: Sequence[float], sigma: float) -> "ObservationFamily":
        """One component per type, all sharing ``sigma``."""
        return cls(tuple((LogNormalComponent(1.0, float(mu), float(sigma)),)
                         for mu in locations))

    @property
    def r(self) -> int:
        return len(self.components)

    @property
    def is_point_mass(self) -> bool:
        return all(len(mixture) == 1 for mixture in self.components)

    @property
    def shared_scale(self) -> bool:
        sigmas = {c.sigma for mixture in self.components for c in mixture}
        return len(sigmas) == 1

    @property
    def sigma(self) -> float:
        """The common scale; only meaningful when ``shared_scale`` holds."""
        if not self.shared_scale:
            raise ConfigurationError("family does not share a single scale",
                                     field="family.sigma")
        return self.components[0][0].sigma

    @property
    def locations(self) -> np.ndarray:
        """Per-type location for point-mass families."""
        if not self.is_point_mass:
            raise ConfigurationError("family is a mixture; no single location per type",
                                     field="family.components")
        return np.array([mixture[0].mu for mixture in self.components])

    def shifted(self, offset: float) -> "ObservationFamily":
        """Shift every location by ``offset`` (log of a rescaling factor)."""
        return ObservationFamily(tuple(
            tuple(LogNormalComponent(c.weight, c.mu + offset, c.sigma) for c in mixture)
            for mixture in self.components))


@dataclass(frozen=True)
class ScalingRule:
    """How annual parameters map to per-sample parameters at period ``h``.

    ``kind`` is ``"location-shift"`` or ``"explicit-table"``; the table maps a
    period in minutes to ``(locations, sigma)``.
    """

    kind: str = "location-shift"
    table: Dict[float, Tuple[Tuple[float, ...], float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("location-shift", "explicit-table"):
            raise ConfigurationError(
                f"scaling rule must be 'location-shift' or 'explicit-table', got '{self.kind}'",
                field="scaling.rule")


@dataclass(frozen=True)
class PrivacyScenario:
    """Prior, annual observation family, window and scaling rule."""

    name: str
    prior: TypePrior
    family: ObservationFamily
    window: float = 60.0
    scaling: ScalingRule = field(default_factory=ScalingRule)
    minutes_per_year: float = 525_600.0

    def __post_init__(self) -> None:
        if self.family.r != self.prior.r:
            raise ConfigurationError(
                ERROR_MESSAGES["LENGTH_MISMATCH"].format(
                    "family.components", self.family.r, self.prior.r),
                field="family.components")
        if not self.window > 0:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("window", self.window), field="window")
        for period, (locations, _sigma) in self.scaling.table.items():
            if len(locations) != self.prior.r:
                raise ConfigurationError(
                    ERROR_MESSAGES["LENGTH_MISMATCH"].format(
                        f"scaling.table[{period}]", len(locations), self.prior.r),
                    field="scaling.table")


@dataclass(frozen=True)
class BoundResult:
    """An alpha value, the method that produced it, and diagnostics."""

    alpha: float
    method: str
    diagnostics: Dict[str, object] = field(default_factory=dict)
    stderr: Optional[float] = None

    def __post_init__(self) -> None:
        if self.method not in BOUND_METHODS:
            raise ConfigurationError(f"unknown bound method '{self.method}'", field="method")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("alpha", "[0, 1]", self.alpha),
                field="alpha")


@dataclass
class PrivacyRow:
    """One row of the alpha-versus-h table. ``None`` marks a method not evaluated."""

    h: float
    T: int
    alpha_map_exact: Optional[float] = None
    alpha_map_mc: Optional[float] = None
    mc_stderr: Optional[float] = None
    alpha_lecam_pinsker: Optional[float] = None
    alpha_lecam_tv: Optional[float] = None
    alpha_fano: Optional[float] = None
    notes: List[str] = field(default_factory=list)
