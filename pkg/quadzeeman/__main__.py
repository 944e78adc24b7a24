"""Allow running quadzeeman as a module: python -m quadzeeman"""

from quadzeeman.cli import app

if __name__ == "__main__":
    app()
