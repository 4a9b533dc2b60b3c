"""Population specification and the seeded random-stream plan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.config import ERROR_MESSAGES
from src.utils import stable_label_code

from .errors import ConfigurationError
from .tcl import TclParams

__all__ = ["PopulationSpec", "RngStreamPlan", "STREAM_LABELS"]

# Purposes that draw randomness. Each gets its own independent substream.
STREAM_LABELS: Tuple[str, ...] = (
    "population",
    "initial-states",
    "process-noise",
    "desired-signal",
    "actuation",
    "privacy-mc",
)


@dataclass(frozen=True)
class PopulationSpec:
    """How to draw a heterogeneous TCL population around ``nominal``."""

    n_tcls: int
    nominal: TclParams
    jitter_fraction: float = 0.1
    init_on_probability: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n_tcls) != self.n_tcls or self.n_tcls < 1:
            raise ConfigurationError(
                ERROR_MESSAGES["NONPOSITIVE"].format("n_tcls", self.n_tcls),
                field="population.n_tcls")
        if not 0 <= self.jitter_fraction < 0.5:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format(
                    "jitter_fraction", "[0, 0.5)", self.jitter_fraction),
                field="population.jitter_fraction")
        if not 0 <= self.init_on_probability <= 1:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format(
                    "init_on_probability", "[0, 1]", self.init_on_probability),
                field="population.init_on_probability")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(
                ERROR_MESSAGES["OUT_OF_RANGE"].format("seed", "[0, 2^64)", self.seed),
                field="seeds.base_seed")


@dataclass(frozen=True)
class RngStreamPlan:
    """Master seed plus purpose labels -> independent numpy generators.

    ``stream("process-noise", trial)`` always yields the same generator for the
    same seed, label and indices, whichever process asks for it, so results do
    not depend on scheduling or worker count.
    """

    seed: int

    def seed_sequence(self, label: str, *indices: int) -> np.random.SeedSequence:
        if label not in STREAM_LABELS:
            raise ConfigurationError(f"Unknown random stream label '{label}'", field="label")
        spawn_key = (stable_label_code(label),) + tuple(int(i) for i in indices)
        return np.random.SeedSequence(entropy=int(self.seed), spawn_key=spawn_key)

    def stream(self, label: str, *indices: int) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence(label, *indices))
