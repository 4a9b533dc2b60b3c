"""Exception hierarchy shared by every layer.

The CLI maps ``ConfigurationError`` to exit code 2 and ``NumericalError`` to
exit code 3 (see ``src.config.EXIT_CODES``).
"""

from __future__ import annotations

from typing import Optional

__all__ = [
    "DlcPrivacyError",
    "ConfigurationError",
    "NumericalError",
    "UnsupportedCaseError",
]


class DlcPrivacyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(DlcPrivacyError):
    """Invalid parameters, schema violations or broken invariants in inputs."""

    def __init__(self, message: str, *, field: Optional[str] = None,
                 line: Optional[int] = None) -> None:
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(prefix + message)


class NumericalError(DlcPrivacyError):
    """A computation failed at runtime."""


class UnsupportedCaseError(NumericalError):
    """The requested method does not apply to this input (e.g. Fano with r=2)."""
