"""Shared fixtures: small universes for brute-force cross checks and a
hand-built figure whose truth value is known by inspection."""
from __future__ import annotations

import pytest

from figpat import Figure, ObjectSpec, UniverseConfig, parse_statement


@pytest.fixture(scope="session")
def small_universe() -> UniverseConfig:
    """Up to five objects with a wide size range, so brute-force
    enumeration of all variable bindings stays cheap."""
    return UniverseConfig(n_min=1, n_max=5, size_min=0.05, size_max=0.3)


@pytest.fixture(scope="session")
def default_universe() -> UniverseConfig:
    return UniverseConfig()


@pytest.fixture(scope="session")
def seven_object_figure() -> Figure:
    """Four red triangles, two yellow squares, one blue circle, spread
    out far enough that nothing overlaps."""
    return Figure(
        (
            ObjectSpec("triangle", "red", 0.10, 0.15, 0.15),
            ObjectSpec("triangle", "red", 0.10, 0.50, 0.15),
            ObjectSpec("triangle", "red", 0.10, 0.85, 0.15),
            ObjectSpec("triangle", "red", 0.10, 0.15, 0.50),
            ObjectSpec("square", "yellow", 0.10, 0.50, 0.50),
            ObjectSpec("square", "yellow", 0.10, 0.85, 0.50),
            ObjectSpec("circle", "blue", 0.10, 0.50, 0.85),
        )
    )


@pytest.fixture(scope="session")
def triangle_conjunction():
    """Exactly four red triangles plus a yellow-vs-circle count race.
    True on seven_object_figure (4 red triangles, 2 yellow, 1 circle)."""
    return parse_statement(
        "COUNT(objects WHERE color = red AND shape = triangle) = 4 "
        "AND COUNT(objects WHERE color = yellow) > COUNT(objects WHERE shape = circle)"
    )
