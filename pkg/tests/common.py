"""Common utilities for fixtures."""

import json
import pathlib

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> pathlib.Path:
    """Return the path of a fixture file."""
    return FIXTURES / name


def load_fixture(name: str):
    """Load a fixture from disk."""
    content = fixture_path(name).read_text()

    if name.endswith(".json"):
        return json.loads(content)

    return content
