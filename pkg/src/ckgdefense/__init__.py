"""Knowledge-guided cyber defense: threat-intel graph, rule generation and RL defenders."""

from pathlib import Path

__version__ = "0.1.0"

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture file."""
    return FIXTURES / name
