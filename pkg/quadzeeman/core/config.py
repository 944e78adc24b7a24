"""Experiment configuration: JSON loading, dotted overrides and validation.

A config file is a JSON object with `"schema_version": 1`. Every section is optional; missing
keys take the defaults below. The resolved config (defaults, file, overrides and the effective
seed) is hashed so a run can be matched to its manifest.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from quadzeeman.core.exceptions import ConfigError, DomainError
from quadzeeman.montecarlo.models import CellGeometry, EnsembleConfig
from quadzeeman.physics.atomdata import PRESETS, AtomSpecies, load_species
from quadzeeman.physics.circuit import CircuitParams
from quadzeeman.physics.coils import CoilGeometry, center_field_per_ampere
from quadzeeman.physics.constants import ZERO_CELSIUS, gauss_to_tesla
from quadzeeman.physics.spin import ObservableScales
from quadzeeman.signal.models import FidModel

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CALIBRATE = "calibrate"

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "output_dir": "results",
    "seed": 0,
    "species": {"preset": "87Rb"},
    "circuit": {
        "R": 3.3,
        "L": 25e-6,
        "C": 10e-9,
        "V": 23.0,
        "drive_frequency": 326e3,
        "pulse_length": 100e-6,
        "tail_length": None,
        "sample_rate": 100e6,
        "extra_resistance": 0.0,
    },
    "coils": {
        "loop_radius": 0.025,
        "turns": 10,
        "separation": 0.025,
        "axis": [0.0, 1.0, 0.0],
        "center": [0.0, 0.0, 0.0],
        "field_per_ampere_gauss": None,
    },
    "cell": {"radius": 0.0185, "center": [0.0, 0.0, 0.0]},
    "montecarlo": {
        "n_particles": 10000,
        "seed": None,
        "temperature_C": 38.0,
        "steps_per_cycle": 200,
        "homogeneous": False,
        "linear_axis_only": False,
        "interleaved_quadratic": False,
        "wall_reflection": "uniform",
        "tail_decay_times": 10.0,
        "retune_capacitor": True,
        "max_pulse_length": 500e-6,
    },
    "signal": {
        "chi": 1.0,
        "gamma": 50.0,
        "omega_L": 2.0 * math.pi * 2500.0,
        "V_R": 1.0,
        "V_I": 1.0,
        "A": 1.0,
        "B": 1.0,
        "noise_sigma": 0.0,
        "n_points": 4000,
        "duration": None,
    },
    "sweep": {
        "taus_us": [float(t) for t in range(0, 142, 2)],
        "voltages": [11.5, 23.0],
        "frequencies_hz": [100e3, 140e3, 200e3, 326e3],
        "n_pi_max": 6,
        "period_target_us": 70.0,
    },
}

_SPECIES_KEYS = {"preset", "file", "name", "I", "gI", "gJ", "dE_hfs_Hz", "mass_u"}


def _key_line(text: str, key: str) -> int | None:
    """Line of the first `"key":` in the raw config text."""
    match = re.search(rf'"{re.escape(key)}"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _merge(
    base: dict[str, Any], update: dict[str, Any], path: Path, text: str, prefix: str
) -> None:
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if prefix == "" and key == "species":
            base[key] = value
            continue
        if key not in base:
            raise ConfigError(f"unknown config key '{dotted}'", path, _key_line(text, key))
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{dotted}' must be an object", path, _key_line(text, key))
            _merge(base[key], value, path, text, f"{dotted}.")
        else:
            base[key] = value


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(resolved: dict[str, Any], override: str) -> None:
    """Apply one `dotted.key=value` override in place; the value is JSON or a plain string."""
    if "=" not in override:
        raise ConfigError(f"override '{override}' is not of the form key=value")
    dotted, raw = override.split("=", 1)
    parts = dotted.strip().split(".")
    node = resolved
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            raise ConfigError(f"unknown config key '{dotted}'")
        node = child
    leaf = parts[-1]
    if leaf not in node and not (len(parts) == 2 and parts[0] == "species"):
        raise ConfigError(f"unknown config key '{dotted}'")
    node[leaf] = _parse_value(raw)


def config_sha256(resolved: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a resolved config."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class MonteCarloSettings:
    n_particles: int
    seed: int
    temperature: float
    steps_per_cycle: int
    homogeneous: bool
    linear_axis_only: bool
    interleaved_quadratic: bool
    wall_reflection: str
    tail_decay_times: float
    retune_capacitor: bool
    max_pulse_length: float


@dataclass(frozen=True)
class SignalSettings:
    model: FidModel
    scales: ObservableScales
    noise_sigma: float
    n_points: int
    duration: float | None


@dataclass(frozen=True)
class SweepSettings:
    taus: tuple[float, ...]
    voltages: tuple[float, ...]
    frequencies: tuple[float, ...]
    n_pi_max: int
    period_target: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment definition.

    `field_per_ampere` is None for the coil geometry value, or "calibrate" to derive it from the
    sweep period target.
    """

    species: AtomSpecies
    circuit: CircuitParams
    coils: CoilGeometry
    field_per_ampere: float | str | None
    cell: CellGeometry
    montecarlo: MonteCarloSettings
    signal: SignalSettings
    sweep: SweepSettings
    output_dir: Path
    seed: int
    resolved: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def sha256(self) -> str:
        return config_sha256(self.resolved)

    def geometric_field(self) -> float:
        """Center field per ampere of the coil geometry (T/A)."""
        return center_field_per_ampere(self.coils)

    def ensemble_config(self, field_per_ampere: float, threads: int = 1) -> EnsembleConfig:
        mc = self.montecarlo
        return EnsembleConfig(
            n_particles=mc.n_particles,
            temperature=mc.temperature,
            species=self.species,
            cell=self.cell,
            coils=self.coils,
            circuit=self.circuit,
            rng_seed=mc.seed,
            steps_per_cycle=mc.steps_per_cycle,
            field_per_ampere=field_per_ampere,
            homogeneous=mc.homogeneous,
            linear_axis_only=mc.linear_axis_only,
            interleaved_quadratic=mc.interleaved_quadratic,
            wall_reflection="cosine" if mc.wall_reflection == "cosine" else "uniform",
            tail_decay_times=mc.tail_decay_times,
            threads=threads,
            scales=self.signal.scales,
        )


def _vector(value: Any, name: str) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) != 3:
        raise DomainError(f"{name} must be a list of three numbers")
    return (float(value[0]), float(value[1]), float(value[2]))


def _build_species(section: dict[str, Any], base_dir: Path) -> AtomSpecies:
    unknown = set(section) - _SPECIES_KEYS
    if unknown:
        raise DomainError(f"unknown species keys: {', '.join(sorted(unknown))}")
    if "file" in section:
        presets = load_species(base_dir / str(section["file"]))
        name = section.get("name")
        if name is None and len(presets) == 1:
            return next(iter(presets.values()))
        if name not in presets:
            raise DomainError(f"species '{name}' not found in {section['file']}")
        return presets[str(name)]
    if "preset" in section and len(section) == 1:
        preset = str(section["preset"])
        if preset not in PRESETS:
            raise DomainError(f"unknown species preset '{preset}'")
        return PRESETS[preset]
    return AtomSpecies.from_preset_dict(section)


def _build_circuit(c: dict[str, Any]) -> CircuitParams:
    return CircuitParams(
        R=float(c["R"]),
        L=float(c["L"]),
        C=float(c["C"]),
        V=float(c["V"]),
        drive_frequency=float(c["drive_frequency"]),
        pulse_length=float(c["pulse_length"]),
        tail_length=None if c["tail_length"] is None else float(c["tail_length"]),
        sample_rate=float(c["sample_rate"]),
        extra_resistance=float(c["extra_resistance"]),
    )


def _build_coils(c: dict[str, Any]) -> tuple[CoilGeometry, float | str | None]:
    geometry = CoilGeometry(
        loop_radius=float(c["loop_radius"]),
        turns_per_coil=int(c["turns"]),
        separation=float(c["separation"]),
        axis=_vector(c["axis"], "coils.axis"),
        center=_vector(c["center"], "coils.center"),
    )
    raw = c["field_per_ampere_gauss"]
    if raw is None or raw == CALIBRATE:
        return geometry, raw
    value = float(raw)
    if value <= 0:
        raise DomainError("coils.field_per_ampere_gauss must be positive")
    return geometry, gauss_to_tesla(value)


def _build_cell(c: dict[str, Any]) -> CellGeometry:
    return CellGeometry(radius=float(c["radius"]), center=_vector(c["center"], "cell.center"))


def _build_montecarlo(m: dict[str, Any], seed: int) -> MonteCarloSettings:
    if m["wall_reflection"] not in ("uniform", "cosine"):
        raise DomainError("montecarlo.wall_reflection must be 'uniform' or 'cosine'")
    settings = MonteCarloSettings(
        n_particles=int(m["n_particles"]),
        seed=seed if m["seed"] is None else int(m["seed"]),
        temperature=float(m["temperature_C"]) + ZERO_CELSIUS,
        steps_per_cycle=int(m["steps_per_cycle"]),
        homogeneous=bool(m["homogeneous"]),
        linear_axis_only=bool(m["linear_axis_only"]),
        interleaved_quadratic=bool(m["interleaved_quadratic"]),
        wall_reflection=str(m["wall_reflection"]),
        tail_decay_times=float(m["tail_decay_times"]),
        retune_capacitor=bool(m["retune_capacitor"]),
        max_pulse_length=float(m["max_pulse_length"]),
    )
    if settings.n_particles < 1:
        raise DomainError("montecarlo.n_particles must be at least 1")
    if settings.temperature <= 0:
        raise DomainError("montecarlo.temperature_C must be above absolute zero")
    if settings.max_pulse_length <= 0:
        raise DomainError("montecarlo.max_pulse_length must be positive")
    return settings


def _build_signal(s: dict[str, Any]) -> SignalSettings:
    model = FidModel(
        chi=float(s["chi"]),
        gamma=float(s["gamma"]),
        omega_L=float(s["omega_L"]),
        V_R=float(s["V_R"]),
        V_I=float(s["V_I"]),
    )
    settings = SignalSettings(
        model=model,
        scales=ObservableScales(A=float(s["A"]), B=float(s["B"])),
        noise_sigma=float(s["noise_sigma"]),
        n_points=int(s["n_points"]),
        duration=None if s["duration"] is None else float(s["duration"]),
    )
    if settings.noise_sigma < 0:
        raise DomainError("signal.noise_sigma must not be negative")
    if settings.n_points < 8:
        raise DomainError("signal.n_points must be at least 8")
    return settings


def _build_sweep(s: dict[str, Any]) -> SweepSettings:
    settings = SweepSettings(
        taus=tuple(float(t) * 1e-6 for t in s["taus_us"]),
        voltages=tuple(float(v) for v in s["voltages"]),
        frequencies=tuple(float(f) for f in s["frequencies_hz"]),
        n_pi_max=int(s["n_pi_max"]),
        period_target=float(s["period_target_us"]) * 1e-6,
    )
    if any(t < 0 for t in settings.taus):
        raise DomainError("sweep.taus_us must not be negative")
    if any(v < 0 for v in settings.voltages):
        raise DomainError("sweep.voltages must not be negative")
    if any(f <= 0 for f in settings.frequencies):
        raise DomainError("sweep.frequencies_hz must be positive")
    if settings.n_pi_max < 0:
        raise DomainError("sweep.n_pi_max must not be negative")
    if settings.period_target <= 0:
        raise DomainError("sweep.period_target_us must be positive")
    return settings


def build_config(
    resolved: dict[str, Any],
    path: Path | None = None,
    text: str = "",
    base_dir: Path | None = None,
) -> ExperimentConfig:
    """Validate a resolved config dict section by section."""
    root = base_dir or Path(".")

    def section(name: str, builder: Any, *args: Any) -> Any:
        try:
            return builder(resolved[name], *args)
        except DomainError as e:
            raise ConfigError(f"{name}: {e}", path, _key_line(text, name)) from e
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{name}: invalid value ({e})", path, _key_line(text, name)) from e

    seed = resolved["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", path, _key_line(text, "seed"))

    coils, field_per_ampere = section("coils", _build_coils)
    config = ExperimentConfig(
        species=section("species", _build_species, root),
        circuit=section("circuit", _build_circuit),
        coils=coils,
        field_per_ampere=field_per_ampere,
        cell=section("cell", _build_cell),
        montecarlo=section("montecarlo", _build_montecarlo, seed),
        signal=section("signal", _build_signal),
        sweep=section("sweep", _build_sweep),
        output_dir=Path(str(resolved["output_dir"])),
        seed=seed,
        resolved=resolved,
    )
    try:
        config.ensemble_config(config.geometric_field())
    except DomainError as e:
        raise ConfigError(str(e), path, _key_line(text, "cell")) from e
    return config


def load_config(
    path: Path | None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """Load, merge, override and validate an experiment config.

    Args:
        path: JSON config file; None runs on defaults alone
        overrides: `dotted.key=value` strings applied after the file
        seed: Seed that replaces the config seed

    Raises:
        ConfigError: the file is missing, unparsable or fails validation
    """
    resolved = copy.deepcopy(DEFAULTS)
    text = ""
    base_dir = Path(".")
    if path is not None:
        if not path.is_file():
            raise ConfigError("config file not found", path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}", path) from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, path, e.lineno) from e
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", path, 1)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
                path,
                _key_line(text, "schema_version"),
            )
        _merge(resolved, data, path, text, "")
        base_dir = path.parent

    for override in overrides or []:
        apply_override(resolved, override)
    if seed is not None:
        resolved["seed"] = seed

    config = build_config(resolved, path, text, base_dir)
    logger.debug("loaded config %s (sha256 %s)", path, config.sha256[:12])
    return config
