"""Domain models describing one CLI run and its persisted envelope.

:class:`RunResult` is data-only bookkeeping for the orchestrator and the CLI
summary. :class:`ResultEnvelope` is what gets written next to every CSV; it
carries no wall-clock information so that a rerun reproduces it byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

__all__ = ["RunResult", "ResultEnvelope"]


@dataclass
class RunResult:
    """Container for the artefacts and statistics of one command."""

    command: str = ""
    success: bool = False

    # IO artefacts
    output_files: List[Path] = field(default_factory=list)

    # Headline numbers shown in the CLI summary
    summary: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    # Time taken in seconds
    processing_time: float = 0.0

    # Error state
    error_message: Optional[str] = None

    @classmethod
    def start_timer(cls) -> float:
        return time.perf_counter()

    def stop_timer(self, start_time: float) -> None:
        self.processing_time = time.perf_counter() - start_time


@dataclass
class ResultEnvelope:
    """Tool version, resolved configuration, seeds and the results payload."""

    tool_version: str
    command: str
    resolved_config: Dict[str, Any]
    seeds: Dict[str, Any]
    results: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "resolved_config": self.resolved_config,
            "seeds": self.seeds,
            "results": self.results,
        }
