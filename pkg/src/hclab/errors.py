"""Exception types shared across the library and the CLI exit codes."""

from __future__ import annotations

__all__ = ["HclabError", "ConfigError", "GuardError", "NumericalDivergence"]


class HclabError(Exception):
    """Base class for library errors."""


class ConfigError(HclabError):
    """Invalid experiment configuration (CLI exit code 2)."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class GuardError(HclabError):
    """A size/enumeration guard would be exceeded (CLI exit code 3)."""


class NumericalDivergence(HclabError):
    """NaNs or runaway values in an iterative computation (CLI exit code 4)."""
