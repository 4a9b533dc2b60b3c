"""Heterogeneous TCL populations and their initial conditions."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..model import (
    ConfigurationError,
    PopulationSpec,
    RngStreamPlan,
    TclFleet,
    TclParams,
    TclState,
)

__all__ = ["sample_population", "sample_initial_states", "sample_initial_arrays"]

logger = logging.getLogger(__name__)

JITTERED_FIELDS = ("R", "C", "P_trans")


def sample_population(spec: PopulationSpec,
                      stream: Optional[np.random.Generator] = None) -> List[TclParams]:
    """Draw ``n_tcls`` parameter sets, jittering R, C and P_trans uniformly.

    Every other field is copied from ``spec.nominal``. A draw that cannot
    duty-cycle rejects the whole spec instead of being resampled.
    """
    rng = stream if stream is not None else RngStreamPlan(spec.seed).stream("population")
    j = spec.jitter_fraction
    draws = {
        name: rng.uniform(getattr(spec.nominal, name) * (1 - j),
                          getattr(spec.nominal, name) * (1 + j), size=spec.n_tcls)
        for name in JITTERED_FIELDS
    }
    population = []
    for i in range(spec.n_tcls):
        try:
            population.append(replace(
                spec.nominal, **{name: float(draws[name][i]) for name in JITTERED_FIELDS}))
        except ConfigurationError as exc:
            raise ConfigurationError(
                f"jittered TCL {i} violates its invariants ({exc}); "
                f"reduce jitter_fraction", field="population.jitter_fraction") from exc
    logger.debug("Sampled %d TCLs (jitter %.3g)", spec.n_tcls, j)
    return population


def sample_initial_arrays(fleet: TclFleet, init_on_probability: float,
                          stream: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform temperatures across each deadband and Bernoulli ON/OFF modes."""
    theta = stream.uniform(fleet.deadband_low, fleet.deadband_high)
    m = (stream.random(len(fleet)) < init_on_probability).astype(float)
    return theta, m


def sample_initial_states(params_list: Sequence[TclParams], init_on_probability: float,
                          stream: np.random.Generator) -> List[TclState]:
    """List form of :func:`sample_initial_arrays`; same draws, same order."""
    theta, m = sample_initial_arrays(TclFleet.from_params(params_list),
                                     init_on_probability, stream)
    return [TclState(theta=float(t), m=int(mode)) for t, mode in zip(theta, m)]
