"""
Utility functions for the DLC privacy tradeoff toolkit.

This module contains helper functions used across the application.
"""

import hashlib
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def setup_logging(logging_config: dict) -> None:
    """
    Set up logging configuration.

    Args:
        logging_config: Logging configuration dictionary
    """
    import logging.config as log_config
    log_config.dictConfig(logging_config)


def stable_label_code(label: str) -> int:
    """
    Map a random-stream purpose label to a stable 32-bit integer.

    The code is identical across processes and interpreter runs.

    Args:
        label: Purpose label such as ``"process-noise"``

    Returns:
        Unsigned 32-bit integer derived from the label
    """
    digest = hashlib.md5(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def output_path(prefix: Path, suffix: str) -> Path:
    """
    Build an output file path from a user prefix such as ``out/run1``.

    Args:
        prefix: Path prefix given on the command line
        suffix: Suffix including extension, e.g. ``"_sweep.csv"``

    Returns:
        Path ``<prefix><suffix>`` with its parent directory created
    """
    prefix = Path(prefix)
    target = prefix.parent / f"{prefix.name}{suffix}"
    safe_create_directory(target.parent)
    return target


def safe_create_directory(directory: Path) -> None:
    """
    Safely create a directory if it doesn't exist.

    Args:
        directory: Path to create
    """
    try:
        directory.mkdir(parents=True, exist_ok=True)
        logger.debug("Ensured directory exists: %s", directory)
    except OSError as e:
        logger.error("Failed to create directory %s: %s", directory, e)
        raise
