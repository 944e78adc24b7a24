"""MCP server for quadzeeman - quadratic Zeeman pulse simulation."""

from quadzeeman.mcp import serve


def main() -> None:
    """Entry point for mcp-server-quadzeeman."""
    serve()


__all__ = ["main", "serve"]
