"""CSV tables, JSON envelopes and population files.

CSV conventions: header row always present, ``.`` decimal separator, six
significant digits for floats, ``\\n`` line endings, and empty cells (never
zeros) for missing values. Reading a table back with :func:`read_table` and
writing it again reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import numpy as np
import pandas as pd

from src.config import config
from src.utils import safe_create_directory

from ..model import ResultEnvelope, TclParams

__all__ = ["write_table", "read_table", "write_envelope", "write_population", "to_json_safe"]

logger = logging.getLogger(__name__)

FLOAT_FORMAT = f"%.{config.SIGNIFICANT_DIGITS}g"


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    safe_create_directory(path.parent)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)


def to_json_safe(value: Any) -> Any:
    """Plain JSON types: numpy scalars unwrapped, non-finite floats become ``None``."""
    if isinstance(value, dict):
        return {str(k): to_json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_json_safe(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def _dump(document: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    safe_create_directory(path.parent)
    text = json.dumps(to_json_safe(document), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def write_envelope(envelope: ResultEnvelope, path: Union[str, Path]) -> Path:
    path = _dump(envelope.to_dict(), path)
    logger.debug("Wrote envelope %s", path)
    return path


def write_population(params: Sequence[TclParams], seed: int, resolved_config: Dict[str, Any],
                     tool_version: str, path: Union[str, Path]) -> Path:
    """Population file: one object per TCL plus the seed and config that produced it."""
    document = {
        "tool_version": tool_version,
        "seeds": {"base_seed": seed, "stream": "population"},
        "resolved_config": resolved_config,
        "n_tcls": len(params),
        "tcls": [asdict(p) for p in params],
    }
    return _dump(document, path)
