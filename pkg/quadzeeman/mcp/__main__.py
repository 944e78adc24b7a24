"""Allow running as python -m quadzeeman.mcp."""

from quadzeeman.mcp import serve

if __name__ == "__main__":
    serve()
