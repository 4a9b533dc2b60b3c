"""
Configuration module for the DLC privacy tradeoff toolkit.

This module contains every default used by the simulator and the privacy
calculator. Scenario files only need to name the values they change.
"""

from typing import Dict, Any, Tuple
from dataclasses import dataclass


@dataclass(frozen=True)
class Config:
    """Default settings for simulations, sweeps and privacy calculations."""

    # Population (one 250 m^2 home per TCL)
    N_TCLS: int = 1000
    R: float = 2.0              # degC/kW
    C: float = 10.0             # kWh/degC
    THETA_A: float = 32.0       # degC
    THETA_SET: float = 20.0     # degC
    DELTA: float = 0.5          # degC
    P_TRANS: float = 12.0       # kW
    P_ELEC: float = 2.5         # kW
    JITTER_FRACTION: float = 0.1
    INIT_ON_PROBABILITY: float = 0.5

    # Time axis
    H_STEP: float = 1.0         # minutes
    HORIZON: float = 60.0       # minutes

    # Process noise, per-step variance in degC^2
    NOISE_VARIANCE: float = 0.0005

    # Controller
    N_BINS: int = 10
    DEADZONE_KW: float = 2.5
    CONTROL_ENABLED: bool = True

    # Sampling policy
    H_OBS: float = 1.0          # minutes
    PHASE: float = 0.0          # minutes

    # Desired power signal, U(1.25 MW * 0.7, 1.25 MW * 1.05)
    KNOT_PERIOD: float = 5.0    # minutes
    DESIRED_LOW: float = 875.0  # kW
    DESIRED_HIGH: float = 1312.5  # kW

    # Seeds
    BASE_SEED: int = 20150101

    # Sweep
    SWEEP_H_LIST: Tuple[float, ...] = (1, 2, 5, 10, 15, 30, 60)
    SWEEP_TRIALS: int = 500
    THREADS: int = 1

    # Privacy
    PRIVACY_WINDOW: float = 60.0  # minutes
    PRIVACY_H_LIST: Tuple[float, ...] = tuple(range(1, 61))
    PRIVACY_N_MC: int = 100_000
    PRIVACY_SCENARIO: str = "recs-income"
    MINUTES_PER_YEAR: float = 525_600.0

    # Output
    VERBOSE: bool = False
    SIGNIFICANT_DIGITS: int = 6


# Privacy computations reported by the privacy command, in CSV column order
PRIVACY_METHODS = ("map-exact", "map-mc", "lecam-pinsker", "lecam-exact-tv", "fano")
DEFAULT_PRIVACY_METHODS = ("map-exact", "lecam-pinsker", "lecam-exact-tv", "fano")

# Logging configuration
LOGGING_CONFIG: Dict[str, Any] = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "standard": {
            "format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
        },
    },
    "handlers": {
        "default": {
            "level": "INFO",
            "formatter": "standard",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "": {
            "handlers": ["default"],
            "level": "INFO",
            "propagate": False
        }
    }
}

# Error messages
ERROR_MESSAGES = {
    "NONPOSITIVE": "{} must be positive, got {}",
    "OUT_OF_RANGE": "{} must lie in {}, got {}",
    "UNREACHABLE": "TCL cannot duty-cycle: need theta_a - theta_g < {:.4g} < {:.4g} < theta_a, "
                   "got theta_a={:.4g}, theta_g={:.4g}",
    "UNKNOWN_KEY": "Unknown configuration key '{}'",
    "WRONG_TYPE": "Field '{}' expects {}, got {!r}",
    "BAD_JSON": "Invalid JSON at line {} column {}: {}",
    "LENGTH_MISMATCH": "Length mismatch: {} has {} entries, expected {}",
    "UNSUPPORTED": "Unsupported case: {}",
    "MISSING_TABLE_ROW": "Explicit parameter table has no row for h={} minutes",
    "COMMAND_EXIT": "Trial {}: {} switched TCL(s) left their deadband by more than the step noise",
}

# Process exit codes
EXIT_CODES = {
    "SUCCESS": 0,
    "CONFIG_ERROR": 2,
    "NUMERICAL_ERROR": 3,
}

# Default configuration instance
config = Config()
