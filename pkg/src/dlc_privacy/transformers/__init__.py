# Pure simulation and privacy logic for dlc_privacy
from __future__ import annotations

from . import (
    dlc_controller,
    population,
    privacy_bounds,
    privacy_scenarios,
    sim_engine,
    tcl_dynamics,
)

__all__ = [
    "dlc_controller",
    "population",
    "privacy_bounds",
    "privacy_scenarios",
    "sim_engine",
    "tcl_dynamics",
]
