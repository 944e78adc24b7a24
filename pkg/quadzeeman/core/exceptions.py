"""quadzeeman custom exceptions."""

from __future__ import annotations

from pathlib import Path


class QuadZeemanError(Exception):
    """Base exception for quadzeeman errors."""


class DomainError(QuadZeemanError):
    """Physical input outside the domain of an operation."""


class FieldSingularityError(DomainError):
    """Field requested on a current-carrying ring."""


class PreconditionError(QuadZeemanError):
    """Operation called on data that does not meet its precondition."""


class ConfigError(QuadZeemanError):
    """Experiment config missing, unparsable or invalid."""

    def __init__(self, message: str, path: Path | None = None, line: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line

    def __str__(self) -> str:
        if self.path is None:
            return self.message
        if self.line is None:
            return f"{self.path}: {self.message}"
        return f"{self.path}:{self.line}: {self.message}"
