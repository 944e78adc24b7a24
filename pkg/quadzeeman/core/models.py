"""Run bookkeeping models for quadzeeman."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ArtifactRecord:
    """A file written during a run, relative to the output directory."""

    name: str
    kind: str


@dataclass(frozen=True)
class PointFailure:
    """A sweep point that raised; the run carried on without it."""

    subcommand: str
    point: str
    error: str

    def to_dict(self) -> dict[str, str]:
        return {"subcommand": self.subcommand, "point": self.point, "error": self.error}


@dataclass
class RunManifest:
    """Everything needed to reproduce a run: config hash, seed and package versions."""

    config_sha256: str
    seed: int
    subcommand: str
    started: str
    finished: str = ""
    files: list[str] = field(default_factory=list)
    versions: dict[str, str] = field(default_factory=dict)
    failures: list[PointFailure] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "subcommand": self.subcommand,
            "started": self.started,
            "finished": self.finished,
            "files": list(self.files),
            "versions": dict(self.versions),
            "failures": [f.to_dict() for f in self.failures],
        }


class RunStats:
    """Statistics from one subcommand run."""

    def __init__(self, subcommand: str) -> None:
        self.subcommand = subcommand
        self.points: int = 0
        self.files: list[str] = []
        self.errors: list[str] = []
        self.summary: dict[str, Any] = {}

    def merge(self, other: RunStats) -> None:
        self.points += other.points
        self.files.extend(other.files)
        self.errors.extend(other.errors)
        self.summary[other.subcommand] = other.summary

    def to_dict(self) -> dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "points": self.points,
            "files": list(self.files),
            "errors": list(self.errors),
            "summary": self.summary,
        }

    def __repr__(self) -> str:
        return (
            f"RunStats(subcommand={self.subcommand!r}, points={self.points}, "
            f"files={len(self.files)}, errors={len(self.errors)})"
        )
