"""Independent reference implementations used by the tests.

Everything here re-derives behavior from the documented contracts
instead of calling the library's fast paths: the evaluator enumerates
every binding with no short-circuiting, geometry is recomputed from the
shape definitions, and shapely provides a second opinion on polygon
containment. Agreement between these and the library is what the
oracle-style tests assert.
"""
from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares
from shapely import contains_xy
from shapely.geometry import Polygon

from figpat.dsl import (
    And,
    AttrTest,
    CountCmp,
    CountExpr,
    GestaltTest,
    Not,
    Or,
    Quantifier,
    Selector,
    SideTest,
    SpatialTest,
    Statement,
)
from figpat.model import Figure, ObjectSpec, UniverseConfig

_TOUCH_TOL = 0.01
_IMPLICIT = "_"


# --------------------------------------------------------------------------
# reference statement evaluator (full enumeration, no short-circuit)


def brute_eval(statement: Statement, figure: Figure, universe: UniverseConfig) -> bool:
    """Evaluate by enumerating every quantifier binding and collecting
    all outcomes before combining them. Gestalt atoms are out of scope;
    statements containing them raise NotImplementedError."""
    objs = figure.objects
    threshold = universe.small_big_threshold

    def attr_value(o: ObjectSpec, attr: str) -> str:
        if attr == "shape":
            return o.shape
        if attr == "color":
            return o.color
        return "small" if o.size < threshold else "big"

    def spatial(relation: str, picked: list[ObjectSpec]) -> bool:
        a, b = picked[0], picked[1]
        if relation == "left_of":
            return a.x < b.x
        if relation == "right_of":
            return b.x < a.x
        if relation == "above":
            return a.y < b.y
        if relation == "below":
            return b.y < a.y
        if relation == "between":
            c = picked[2]
            xs = sorted([b.x, c.x])
            ys = sorted([b.y, c.y])
            return xs[0] <= a.x <= xs[1] and ys[0] <= a.y <= ys[1]
        if relation == "touches":
            gap = math.dist((a.x, a.y), (b.x, b.y)) - (a.size + b.size) / 2.0
            return abs(gap) <= _TOUCH_TOL
        if relation == "same_shape":
            return a.shape == b.shape
        if relation == "same_color":
            return a.color == b.color
        if relation == "smaller":
            return a.size < b.size
        return b.size < a.size  # bigger

    def select(sel: Selector, env: Mapping[str, int]) -> list[int]:
        if sel.where is None:
            return list(range(len(objs)))
        picked = []
        for i in range(len(objs)):
            child = dict(env)
            child[_IMPLICIT] = i
            if ev(sel.where, child):
                picked.append(i)
        return picked

    def ev(node, env: Mapping[str, int]) -> bool:
        if isinstance(node, And):
            outcomes = [ev(c, env) for c in node.children]
            return False not in outcomes
        if isinstance(node, Or):
            outcomes = [ev(c, env) for c in node.children]
            return True in outcomes
        if isinstance(node, Not):
            return not ev(node.child, env)
        if isinstance(node, AttrTest):
            got = attr_value(objs[env[node.var]], node.attr)
            same = got == node.value
            return same if node.op == "=" else not same
        if isinstance(node, SideTest):
            o = objs[env[node.var]]
            if node.side == "left":
                return o.x < 0.5
            if node.side == "right":
                return o.x > 0.5
            if node.side == "upper":
                return o.y < 0.5
            return o.y > 0.5
        if isinstance(node, SpatialTest):
            return spatial(node.relation, [objs[env[v]] for v in node.args])
        if isinstance(node, CountCmp):
            left = len(select(node.left.selector, env))
            right = node.right if isinstance(node.right, int) else len(select(node.right.selector, env))
            return {
                "=": left == right,
                "!=": left != right,
                "<": left < right,
                "<=": left <= right,
                ">": left > right,
                ">=": left >= right,
            }[node.op]
        if isinstance(node, Quantifier):
            domain = select(node.selector, env)
            k = len(node.variables)
            if node.distinct:
                bindings = itertools.permutations(domain, k)
            else:
                bindings = itertools.product(domain, repeat=k)
            outcomes = []
            for tup in bindings:
                child = dict(env)
                child.update(zip(node.variables, tup))
                outcomes.append(ev(node.body, child))
            if node.kind == "exists":
                return True in outcomes
            return False not in outcomes
        if isinstance(node, (CountExpr, GestaltTest)):
            raise NotImplementedError("reference evaluator covers binding semantics only")
        raise TypeError(f"unknown node {node!r}")

    return ev(statement.root, {})


# --------------------------------------------------------------------------
# random statement text (gestalt-free, always well-formed)

_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
_SPATIAL2 = ("LEFT_OF", "RIGHT_OF", "ABOVE", "BELOW", "TOUCHES", "SAME_SHAPE", "SAME_COLOR", "SMALLER", "BIGGER")
_SIDES = ("LEFT_SIDE", "RIGHT_SIDE", "UPPER_SIDE", "LOWER_SIDE")
_VARS = ("p", "q", "w")


def random_statement_text(rng: np.random.Generator, universe: UniverseConfig, max_depth: int = 2) -> str:
    """One random statement drawing from the universe's vocabulary.

    Covers counts, count-to-count comparison, quantifiers (existential
    and universal, with and without DISTINCT, one to three variables),
    every spatial relation and side test, and boolean combinations.
    """

    def choice(seq):
        return seq[int(rng.integers(0, len(seq)))]

    def value_for(attr: str) -> str:
        if attr == "shape":
            return choice(universe.allowed_shapes)
        if attr == "color":
            return choice(universe.allowed_colors)
        return choice(("small", "big"))

    def where_clause() -> str:
        attr = choice(("shape", "color", "size"))
        return f"{attr} {choice(('=', '!='))} {value_for(attr)}"

    def selector() -> str:
        r = rng.random()
        if r < 0.4:
            return "objects"
        if r < 0.8:
            return f"objects WHERE {where_clause()}"
        joiner = choice(("AND", "OR"))
        return f"objects WHERE {where_clause()} {joiner} {where_clause()}"

    def count_cmp() -> str:
        left = f"COUNT({selector()})"
        op = choice(_CMP_OPS)
        if rng.random() < 0.7:
            return f"{left} {op} {int(rng.integers(0, 6))}"
        return f"{left} {op} COUNT({selector()})"

    def body_pred(names: Sequence[str]) -> str:
        r = rng.random()
        if r < 0.4:
            var = choice(names)
            attr = choice(("shape", "color", "size"))
            return f"{var}.{attr} {choice(('=', '!='))} {value_for(attr)}"
        if r < 0.55:
            return f"{choice(_SIDES)}({choice(names)})"
        if r < 0.9 or len(names) < 3:
            return f"{choice(_SPATIAL2)}({choice(names)}, {choice(names)})"
        a, b, c = names[0], names[1], names[2]
        return f"BETWEEN({a}, {b}, {c})"

    def quantifier() -> str:
        kind = choice(("EXISTS", "FORALL"))
        k = int(rng.integers(1, 4))
        names = _VARS[:k]
        distinct = " DISTINCT" if k > 1 and rng.random() < 0.5 else ""
        preds = [body_pred(names) for _ in range(int(rng.integers(1, 3)))]
        body = f" {choice(('AND', 'OR'))} ".join(preds)
        if rng.random() < 0.25:
            body = f"NOT ({body})"
        return f"{kind} {', '.join(names)}{distinct} IN {selector()} : {body}"

    def atom() -> str:
        return count_cmp() if rng.random() < 0.5 else quantifier()

    def stmt(depth: int) -> str:
        r = rng.random()
        if depth <= 0 or r < 0.45:
            return atom()
        if r < 0.65:
            return f"({stmt(depth - 1)}) AND ({stmt(depth - 1)})"
        if r < 0.85:
            return f"({stmt(depth - 1)}) OR ({stmt(depth - 1)})"
        return f"NOT ({stmt(depth - 1)})"

    return stmt(max_depth)


# --------------------------------------------------------------------------
# geometry second opinions


def region_vertices(shape: str, cx: float, cy: float, size: float) -> tuple[tuple[float, float], ...]:
    """Polygon corners re-derived from the shape definitions: an
    axis-aligned square of side size/sqrt(2), an equilateral triangle
    with circumradius size/2 and the apex toward smaller y."""
    if shape == "square":
        h = size / (2.0 * math.sqrt(2.0))
        return ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h))
    if shape == "triangle":
        r = size / 2.0
        w = r * math.sqrt(3.0) / 2.0
        return ((cx, cy - r), (cx + w, cy + r / 2.0), (cx - w, cy + r / 2.0))
    raise ValueError(f"no polygon for {shape!r}")


def oracle_contains(shape: str, cx: float, cy: float, size: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized containment: circles by the distance inequality,
    polygons through shapely (boundary counted as inside)."""
    if shape == "circle":
        r = size / 2.0
        return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    poly = Polygon(region_vertices(shape, cx, cy, size))
    inside = contains_xy(poly, xs, ys)
    boundary = contains_xy(poly.boundary, xs, ys)
    return np.asarray(inside | boundary, dtype=bool)


def oracle_area(shape: str, size: float) -> float:
    r = size / 2.0
    if shape == "circle":
        return math.pi * r * r
    if shape == "square":
        side = size / math.sqrt(2.0)
        return side * side
    if shape == "triangle":
        side = size / 2.0 * math.sqrt(3.0)
        return math.sqrt(3.0) / 4.0 * side * side
    raise ValueError(f"unknown shape {shape!r}")


def geometric_circle_fit(points: np.ndarray) -> tuple[float, float, float, float]:
    """Geometric least-squares circle (cx, cy, radius, rms residual),
    minimizing true radial distances with scipy."""
    pts = np.asarray(points, dtype=float)
    cx0, cy0 = pts.mean(axis=0)
    r0 = float(np.mean(np.hypot(pts[:, 0] - cx0, pts[:, 1] - cy0)))

    def resid(params):
        cx, cy, r = params
        return np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r

    sol = least_squares(resid, x0=[cx0, cy0, r0])
    cx, cy, r = (float(v) for v in sol.x)
    rms = float(np.sqrt(np.mean(resid(sol.x) ** 2)))
    return cx, cy, r, rms


def union_find_clusters(objs: Sequence[ObjectSpec], eps: float) -> list[list[int]]:
    """Plain union-find over the pairwise distance graph."""
    n = len(objs)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if math.dist((objs[i].x, objs[i].y), (objs[j].x, objs[j].y)) <= eps:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
