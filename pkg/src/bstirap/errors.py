"""Exception types shared across the package."""

from __future__ import annotations


class BstirapError(Exception):
    """Base class for all package-specific errors."""


class GridError(BstirapError, ValueError):
    """Grid construction parameters are invalid."""


class EntranceWindowError(BstirapError, ValueError):
    """Entrance envelopes are not negligible at the window boundary."""


class IntegrationAccuracyError(BstirapError, RuntimeError):
    """Norm drift of an integrated trajectory exceeded tolerance."""


class DegenerateFrameError(BstirapError, ValueError):
    """Dressed frame requested where both field amplitudes vanish."""


class PropagationError(BstirapError, RuntimeError):
    """Depth stepping produced invalid fields or records."""


class CharacteristicsError(BstirapError, RuntimeError):
    """Evaluation of the characteristics solution failed."""


class ConfigError(BstirapError, ValueError):
    """Scenario configuration text is malformed or inconsistent.

    Carries the offending line number and key when known so CLI errors can
    point at the exact spot in the file.
    """

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"key '{key}': "
        super().__init__(prefix + message)
