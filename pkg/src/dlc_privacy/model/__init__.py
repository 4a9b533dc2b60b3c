# Domain models for the dlc_privacy project
from __future__ import annotations

from .controller import ControllerConfig, EstimatorState, SwitchCommand
from .errors import (
    ConfigurationError,
    DlcPrivacyError,
    NumericalError,
    UnsupportedCaseError,
)
from .population import PopulationSpec, RngStreamPlan
from .privacy import (
    BoundResult,
    LogNormalComponent,
    ObservationFamily,
    PrivacyRow,
    PrivacyScenario,
    ScalingRule,
    TypePrior,
)
from .result import ResultEnvelope, RunResult
from .scenario import (
    BoxStatistics,
    DesiredSignalSpec,
    SamplingPolicy,
    ScenarioConfig,
    SweepResult,
    SweepRow,
    TclTrace,
    TrialResult,
)
from .tcl import NoiseModel, OFF, ON, TclFleet, TclParams, TclState

__all__ = [
    "BoundResult",
    "BoxStatistics",
    "ConfigurationError",
    "ControllerConfig",
    "DesiredSignalSpec",
    "DlcPrivacyError",
    "EstimatorState",
    "LogNormalComponent",
    "NoiseModel",
    "NumericalError",
    "OFF",
    "ON",
    "ObservationFamily",
    "PopulationSpec",
    "PrivacyRow",
    "PrivacyScenario",
    "ResultEnvelope",
    "RngStreamPlan",
    "RunResult",
    "SamplingPolicy",
    "ScalingRule",
    "ScenarioConfig",
    "SweepResult",
    "SweepRow",
    "SwitchCommand",
    "TclFleet",
    "TclParams",
    "TclState",
    "TclTrace",
    "TrialResult",
    "TypePrior",
    "UnsupportedCaseError",
]
