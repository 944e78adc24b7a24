"""
MCP server for quadzeeman.

Exposes the simulator to LLMs via the Model Context Protocol.

Tools:
    - zeeman_coefficients: Linear and quadratic Larmor coefficients of a species
    - breit_rabi_energy: Exact ground-state sublevel energy in a field
    - simulate_circuit: Peak current, buildup time, decay rate and charge of a pulse
    - pulse_phases: Linear and quadratic phases accumulated over a pulse
    - appendix_readout: Observable expectations after a quadratic phase
    - fit_fid: Fit the rotation-signal model to a sampled series

Usage:
    Install: pip install mcp-server-quadzeeman
    Run: mcp-server-quadzeeman
"""

import asyncio

from quadzeeman.mcp.server import serve as _serve


def serve() -> None:
    """Entry point for the MCP server."""
    asyncio.run(_serve())


__all__ = ["serve"]
