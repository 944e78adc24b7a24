"""MCP server implementation for quadzeeman."""

from __future__ import annotations

import json
import math
from typing import Any

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from quadzeeman.core.exceptions import DomainError
from quadzeeman.physics.atomdata import (
    PRESETS,
    AtomSpecies,
    breit_rabi_energy,
    hyperfine_branch,
    larmor_frequencies,
    zeeman_coefficients,
)
from quadzeeman.physics.circuit import (
    CircuitParams,
    buildup_time,
    peak_current,
    ringdown_rate,
    simulate_pulse,
    total_charge,
)
from quadzeeman.physics.coils import CoilGeometry, center_field_per_ampere
from quadzeeman.physics.constants import PLANCK, gauss_to_tesla, tesla_to_gauss
from quadzeeman.physics.spin import ObservableScales, appendix_pipeline, phases_from_trace
from quadzeeman.signal.fid import fit_fid
from quadzeeman.signal.models import DEFAULT_FROZEN, FidModel

server = Server("quadzeeman")

_CIRCUIT_FIELDS = (
    "R",
    "L",
    "C",
    "V",
    "drive_frequency",
    "pulse_length",
    "tail_length",
    "sample_rate",
    "extra_resistance",
)

_SPECIES_SCHEMA = {
    "type": "string",
    "description": "Species preset name (default: 87Rb)",
    "default": "87Rb",
}

_CIRCUIT_SCHEMA = {
    "type": "object",
    "description": (
        "Circuit overrides in SI units: R, L, C, V, drive_frequency, pulse_length, "
        "tail_length, sample_rate, extra_resistance"
    ),
}


def _species(name: str) -> AtomSpecies:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown species preset '{name}' (known: {', '.join(sorted(PRESETS))})"
        ) from None


def _circuit(overrides: dict[str, Any] | None) -> CircuitParams:
    values = dict(overrides or {})
    unknown = set(values) - set(_CIRCUIT_FIELDS)
    if unknown:
        raise DomainError(f"unknown circuit parameters: {', '.join(sorted(unknown))}")
    return CircuitParams(**values)


@server.list_tools()  # type: ignore[no-untyped-call, untyped-decorator]
async def list_tools() -> list[Tool]:
    """List available tools."""
    return [
        Tool(
            name="zeeman_coefficients",
            description=(
                "Linear and quadratic Larmor-frequency coefficients of the F = 1 (or given F) "
                "ground manifold. With a field in gauss, also the Larmor frequencies."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "species": _SPECIES_SCHEMA,
                    "F": {"type": "number", "description": "Hyperfine level (default: 1)"},
                    "B_gauss": {"type": "number", "description": "Field in gauss"},
                },
            },
        ),
        Tool(
            name="breit_rabi_energy",
            description="Exact energy of the ground sublevel |F, m_F> in a static field.",
            inputSchema={
                "type": "object",
                "properties": {
                    "species": _SPECIES_SCHEMA,
                    "F": {"type": "number", "description": "Hyperfine level"},
                    "m_F": {"type": "number", "description": "Magnetic sublevel"},
                    "B_gauss": {"type": "number", "description": "Field in gauss"},
                },
                "required": ["F", "m_F", "B_gauss"],
            },
        ),
        Tool(
            name="simulate_circuit",
            description=(
                "Simulate the pulser current. Returns peak current, buildup time, envelope "
                "decay rate (null when the current does not ring) and total charge."
            ),
            inputSchema={
                "type": "object",
                "properties": {"circuit": _CIRCUIT_SCHEMA},
            },
        ),
        Tool(
            name="pulse_phases",
            description=(
                "Linear and quadratic Zeeman phases accumulated by an F = 1 atom at the coil "
                "center over one pulse."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "species": _SPECIES_SCHEMA,
                    "circuit": _CIRCUIT_SCHEMA,
                    "field_per_ampere_gauss": {
                        "type": "number",
                        "description": "Field per ampere in G/A (default: coil geometry value)",
                    },
                    "coils": {
                        "type": "object",
                        "description": "Coil overrides: loop_radius, turns_per_coil, separation",
                    },
                },
            },
        ),
        Tool(
            name="appendix_readout",
            description=(
                "Expectation values <alpha_R>, <alpha_I>, <beta> after a quadratic phase phi2, "
                "for the x-polarized start state and pi/4 readout."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "phi2": {"type": "number", "description": "Quadratic phase in radians"},
                    "A": {"type": "number", "description": "Alignment scale (default: 1)"},
                    "B": {"type": "number", "description": "Orientation scale (default: 1)"},
                },
                "required": ["phi2"],
            },
        ),
        Tool(
            name="fit_fid",
            description=(
                "Fit the decaying rotation-signal model to sampled times and values. "
                "chi, V_R and V_I are frozen by default."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    "times": {"type": "array", "items": {"type": "number"}},
                    "values": {"type": "array", "items": {"type": "number"}},
                    "initial_guess": {
                        "type": "object",
                        "description": "Starting parameters (chi, gamma, omega_L, ...)",
                    },
                    "frozen": {"type": "array", "items": {"type": "string"}},
                },
                "required": ["times", "values"],
            },
        ),
    ]


@server.call_tool()  # type: ignore[untyped-decorator]
async def call_tool(name: str, arguments: dict[str, Any]) -> list[TextContent]:
    """Handle tool calls."""
    try:
        if name == "zeeman_coefficients":
            result = _handle_zeeman_coefficients(
                arguments.get("species", "87Rb"),
                arguments.get("F", 1.0),
                arguments.get("B_gauss"),
            )
        elif name == "breit_rabi_energy":
            result = _handle_breit_rabi_energy(
                arguments.get("species", "87Rb"),
                arguments["F"],
                arguments["m_F"],
                arguments["B_gauss"],
            )
        elif name == "simulate_circuit":
            result = _handle_simulate_circuit(arguments.get("circuit"))
        elif name == "pulse_phases":
            result = _handle_pulse_phases(
                arguments.get("species", "87Rb"),
                arguments.get("circuit"),
                arguments.get("field_per_ampere_gauss"),
                arguments.get("coils"),
            )
        elif name == "appendix_readout":
            result = _handle_appendix_readout(
                arguments["phi2"],
                arguments.get("A", 1.0),
                arguments.get("B", 1.0),
            )
        elif name == "fit_fid":
            result = _handle_fit_fid(
                arguments["times"],
                arguments["values"],
                arguments.get("initial_guess"),
                arguments.get("frozen"),
            )
        else:
            result = {"error": f"Unknown tool: {name}"}

        return [TextContent(type="text", text=json.dumps(result, indent=2))]

    except Exception as e:
        return [TextContent(type="text", text=json.dumps({"error": str(e)}))]


def _handle_zeeman_coefficients(
    species_name: str, F: float, B_gauss: float | None
) -> dict[str, Any]:
    """Handle zeeman_coefficients tool."""
    species = _species(species_name)
    coeffs = zeeman_coefficients(species, hyperfine_branch(species, float(F)))
    result: dict[str, Any] = {
        "species": species.name,
        "F": float(F),
        "branch": coeffs.sign,
        "omega1_per_B": coeffs.omega1_per_B,
        "omega2_per_B2": coeffs.omega2_per_B2,
    }
    if B_gauss is not None:
        omega1, omega2 = larmor_frequencies(coeffs, gauss_to_tesla(float(B_gauss)))
        result.update(
            {
                "B_gauss": float(B_gauss),
                "omega1_rad_s": omega1,
                "omega2_rad_s": omega2,
                "f1_hz": omega1 / (2.0 * math.pi),
                "f2_hz": omega2 / (2.0 * math.pi),
            }
        )
    return result


def _handle_breit_rabi_energy(
    species_name: str, F: float, m_F: float, B_gauss: float
) -> dict[str, Any]:
    """Handle breit_rabi_energy tool."""
    species = _species(species_name)
    energy = breit_rabi_energy(species, float(F), float(m_F), gauss_to_tesla(float(B_gauss)))
    return {
        "species": species.name,
        "F": float(F),
        "m_F": float(m_F),
        "B_gauss": float(B_gauss),
        "energy_J": energy,
        "energy_hz": energy / PLANCK,
    }


def _handle_simulate_circuit(overrides: dict[str, Any] | None) -> dict[str, Any]:
    """Handle simulate_circuit tool."""
    params = _circuit(overrides)
    trace = simulate_pulse(params)
    return {
        "samples": len(trace.times),
        "duration_s": trace.duration,
        "peak_current_A": peak_current(trace),
        "buildup_time_s": buildup_time(trace),
        "decay_rate_per_s": ringdown_rate(trace),
        "total_charge_C": total_charge(trace),
    }


def _handle_pulse_phases(
    species_name: str,
    circuit: dict[str, Any] | None,
    field_per_ampere_gauss: float | None,
    coils: dict[str, Any] | None,
) -> dict[str, Any]:
    """Handle pulse_phases tool."""
    species = _species(species_name)
    coeffs = zeeman_coefficients(species, hyperfine_branch(species, 1.0))
    if field_per_ampere_gauss is None:
        b = center_field_per_ampere(CoilGeometry(**(coils or {})))
    else:
        b = gauss_to_tesla(float(field_per_ampere_gauss))
    phases = phases_from_trace(simulate_pulse(_circuit(circuit)), b, coeffs)
    return {
        "species": species.name,
        "field_per_ampere_gauss": tesla_to_gauss(b),
        "phi1_rad": phases.phi1,
        "phi2_rad": phases.phi2,
        "phi2_over_pi": phases.phi2 / math.pi,
    }


def _handle_appendix_readout(phi2: float, A: float, B: float) -> dict[str, Any]:
    """Handle appendix_readout tool."""
    alpha_R, alpha_I, beta = appendix_pipeline(float(phi2), ObservableScales(A=A, B=B))
    return {"phi2": float(phi2), "alpha_R": alpha_R, "alpha_I": alpha_I, "beta": beta}


def _handle_fit_fid(
    times: list[float],
    values: list[float],
    initial_guess: dict[str, Any] | None,
    frozen: list[str] | None,
) -> dict[str, Any]:
    """Handle fit_fid tool."""
    guess = FidModel.from_dict(initial_guess or {})
    fit = fit_fid(times, values, guess, frozen=DEFAULT_FROZEN if frozen is None else frozen)
    return fit.to_dict()


async def serve() -> None:
    """Run the MCP server."""
    async with stdio_server() as (read_stream, write_stream):
        await server.run(read_stream, write_stream, server.create_initialization_options())
