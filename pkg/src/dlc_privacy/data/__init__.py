# Data layer for dlc_privacy (DMOT).
"""Side-effecting code only: configuration files, bundled scenarios and
result writers. Domain logic lives in the model and transformer layers.
"""

from __future__ import annotations

from .config_loader import (
    load_privacy_scenario,
    load_simulation_config,
    resolve_simulation_config,
)
from .writers import read_table, write_envelope, write_population, write_table

__all__ = [
    "load_privacy_scenario",
    "load_simulation_config",
    "resolve_simulation_config",
    "read_table",
    "write_envelope",
    "write_population",
    "write_table",
]
