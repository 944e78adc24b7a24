"""
Core module: run bookkeeping, exceptions, configuration and artifacts.

Models (models.py):
    - RunStats: Points, files and errors of one subcommand run
    - RunManifest: Config hash, seed, package versions and failures of a run
    - PointFailure: A sweep point that raised

Exceptions (exceptions.py):
    - QuadZeemanError: Base exception for all quadzeeman errors
    - DomainError: Input outside the physical domain of an operation
    - FieldSingularityError: Field evaluated on a coil winding
    - PreconditionError: Operation called in an invalid state
    - ConfigError: Config file missing, unparsable or invalid (carries path and line)

Artifacts (artifacts.py):
    - ArtifactStore: CSV, JSON and plot-script writer that keeps the run manifest

Config (config.py) and the runner (runner.py) depend on the physics packages and are imported
from their modules directly.
"""

from quadzeeman.core.artifacts import ArtifactStore
from quadzeeman.core.exceptions import (
    ConfigError,
    DomainError,
    FieldSingularityError,
    PreconditionError,
    QuadZeemanError,
)
from quadzeeman.core.models import ArtifactRecord, PointFailure, RunManifest, RunStats

__all__ = [
    # Models
    "ArtifactRecord",
    "PointFailure",
    "RunManifest",
    "RunStats",
    # Exceptions
    "QuadZeemanError",
    "DomainError",
    "FieldSingularityError",
    "PreconditionError",
    "ConfigError",
    # Artifacts
    "ArtifactStore",
]
