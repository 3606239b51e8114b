"""English paraphrases of statements. The renderer is deterministic,
total over the grammar, and folds common quantifier idioms into
natural phrasing."""
from __future__ import annotations

import numpy as np
import pytest

from figpat import parse_statement
from figpat.dsl import render_statement_text
from oracles import random_statement_text


def text_of(source: str) -> str:
    return render_statement_text(parse_statement(source))


FROZEN = [
    (
        "COUNT(objects WHERE color = red AND shape = triangle) = 4",
        "the figure contains exactly 4 red triangles",
    ),
    (
        "NOT EXISTS a IN objects : a.color = red",
        "there is no red object",
    ),
    (
        "COUNT(objects WHERE color = red AND shape = triangle) = 4 "
        "AND COUNT(objects WHERE color = yellow) > COUNT(objects WHERE shape = circle)",
        "the figure contains exactly 4 red triangles "
        "and the figure contains more yellow objects than circles",
    ),
    (
        "EXISTS a IN objects : a.color = red AND a.shape = square",
        "there is a red square",
    ),
    (
        "COUNT(objects) >= 2",
        "the figure contains at least 2 objects",
    ),
    (
        "COUNT(objects WHERE shape = circle) < 3",
        "the figure contains fewer than 3 circles",
    ),
    (
        "COUNT(objects WHERE color = blue) <= 1",
        "the figure contains at most 1 blue object",
    ),
    (
        "COUNT(objects WHERE color = yellow) > COUNT(objects WHERE color = red)",
        "the figure contains more yellow objects than red objects",
    ),
    (
        "EXISTS a IN objects : a.size = big",
        "there is a big object",
    ),
    (
        "CIRCULAR(objects)",
        "the objects are arranged on a circle",
    ),
    (
        "CLUSTERED(objects, 3)",
        "the objects form exactly 3 proximity clusters",
    ),
    (
        "FORALL a IN objects WHERE shape = triangle : a.color = red",
        "every object a among the triangles satisfies a is red",
    ),
    (
        "COUNT(objects) = 1 OR COUNT(objects) = 9",
        "the figure contains exactly 1 object or the figure contains exactly 9 objects",
    ),
]


@pytest.mark.parametrize("source,expected", FROZEN, ids=[s[:40] for s, _ in FROZEN])
def test_frozen_paraphrases(source, expected):
    assert text_of(source) == expected


def test_singular_plural():
    assert "1 object" in text_of("COUNT(objects) = 1")
    assert "2 objects" in text_of("COUNT(objects) = 2")
    assert "circles" in text_of("COUNT(objects WHERE shape = circle) = 2")


def test_negated_count():
    assert text_of("COUNT(objects) != 5") == "the figure does not contain exactly 5 objects"


def test_distinct_pair_phrasing():
    out = text_of("EXISTS a, b DISTINCT IN objects : SAME_SHAPE(a, b) AND NOT SAME_COLOR(a, b)")
    assert "distinct" in out
    assert "same shape" in out
    assert "different colors" in out


def test_deterministic():
    src = "COUNT(objects WHERE color = red) >= 1 AND CIRCULAR(objects)"
    assert text_of(src) == text_of(src)


def test_total_over_random_statements(small_universe):
    rng = np.random.default_rng(314)
    for _ in range(120):
        s = parse_statement(random_statement_text(rng, small_universe), small_universe)
        out = render_statement_text(s)
        assert isinstance(out, str) and out.strip()
        # plain prose: no raw grammar tokens leak through
        assert "COUNT(" not in out
        assert " : " not in out
