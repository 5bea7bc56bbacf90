"""Shared fixtures for the test suite."""

from __future__ import annotations

from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "goldens"


@pytest.fixture
def goldens() -> Path:
    return GOLDEN_DIR


@pytest.fixture
def tiny_kg_triples() -> list[tuple[str, str, str]]:
    """A small store with branches, a reverse edge and a cycle."""
    return [
        ("A", "r1", "B"),
        ("A", "r1", "C"),
        ("A", "r2", "D"),
        ("C", "r3", "A"),
        ("B", "r4", "E"),
        ("E", "r5", "E"),
    ]
