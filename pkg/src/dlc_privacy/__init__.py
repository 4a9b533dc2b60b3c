# dlc_privacy package adhering to DMOT architecture

"""Direct load control of thermostatic loads under reduced smart-meter
sampling, and the inferential privacy that sampling buys.

Modules:
    data:           Strict JSON configuration, bundled scenarios, CSV/JSON writers.
    model:          Domain dataclasses and the error hierarchy.
    transformers:   Pure simulation, control and privacy-bound logic.
    orchestrator:   One method per CLI command.

End-users are expected to interact with the `Orchestrator` class, which
`main.py` drives.
"""

from __future__ import annotations

from .orchestrator import Orchestrator

__all__ = [
    "Orchestrator",
]
