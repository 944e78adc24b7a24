"""Artifact writer: CSV tables, JSON documents, plot scripts and the run manifest."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence
from datetime import UTC, datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from quadzeeman.core.exceptions import PreconditionError
from quadzeeman.core.models import ArtifactRecord, PointFailure, RunManifest

logger = logging.getLogger(__name__)

Cell = float | int | str | None

MANIFEST_NAME = "manifest.json"


def format_cell(value: Cell) -> str:
    """CSV cell text; floats use repr so reruns are byte-identical and lossless."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return repr(float(value))
    return str(value)


def package_versions() -> dict[str, str]:
    try:
        own = version("quadzeeman")
    except PackageNotFoundError:
        own = "unknown"
    return {"quadzeeman": own, "numpy": np.__version__, "scipy": scipy.__version__}


class ArtifactStore:
    """Writes the files of one run into `out_dir` and keeps the manifest.

    The directory is created on the first write, so a run that fails validation leaves nothing
    behind.
    """

    def __init__(self, out_dir: Path, subcommand: str, config_sha256: str, seed: int) -> None:
        self._out_dir = out_dir
        self._records: list[ArtifactRecord] = []
        self._manifest = RunManifest(
            config_sha256=config_sha256,
            seed=seed,
            subcommand=subcommand,
            started=datetime.now(UTC).isoformat(),
            versions=package_versions(),
        )

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    @property
    def files(self) -> list[str]:
        return [record.name for record in self._records]

    @property
    def failures(self) -> list[PointFailure]:
        return list(self._manifest.failures)

    def _path(self, name: str, kind: str) -> Path:
        if any(record.name == name for record in self._records):
            raise PreconditionError(f"artifact {name} was already written in this run")
        self._out_dir.mkdir(parents=True, exist_ok=True)
        self._records.append(ArtifactRecord(name=name, kind=kind))
        return self._out_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
        """Write a comma-separated table with a header line."""
        lines = [",".join(header)]
        for row in rows:
            if len(row) != len(header):
                raise PreconditionError(
                    f"{name}: row has {len(row)} cells, header has {len(header)}"
                )
            lines.append(",".join(format_cell(cell) for cell in row))
        path = self._path(name, "csv")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.debug("wrote %s (%d rows)", path, len(lines) - 1)
        return path

    def write_json(self, name: str, data: Any) -> Path:
        path = self._path(name, "json")
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def write_plot_script(
        self,
        name: str,
        csv_name: str,
        title: str,
        xlabel: str,
        ylabel: str,
        series: Sequence[tuple[int, int, str]],
    ) -> Path:
        """Write a gnuplot script plotting (x column, y column, legend) series of `csv_name`."""
        plots = ", ".join(
            f"'{csv_name}' using {x}:{y} with lines title '{legend}'" for x, y, legend in series
        )
        lines = [
            f"# {title}",
            f"# data: {csv_name}",
            "set datafile separator ','",
            "set key autotitle columnhead",
            f"set title '{title}'",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
            f"plot {plots}",
        ]
        path = self._path(name, "plot")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def record_failure(self, subcommand: str, point: str, error: Exception) -> None:
        logger.warning("%s: point %s failed: %s", subcommand, point, error)
        self._manifest.failures.append(
            PointFailure(
                subcommand=subcommand, point=point, error=f"{type(error).__name__}: {error}"
            )
        )

    def write_manifest(self) -> Path:
        """Write manifest.json; called once, after every other file."""
        self._manifest.finished = datetime.now(UTC).isoformat()
        self._manifest.files = self.files
        self._out_dir.mkdir(parents=True, exist_ok=True)
        path = self._out_dir / MANIFEST_NAME
        path.write_text(json.dumps(self._manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path
