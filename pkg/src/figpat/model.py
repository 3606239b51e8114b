"""Core value types: objects, figures, universes, and their validation.

A figure lives on the unit square with y growing downward (image
convention). Every object is summarized by a bounding disc whose
diameter is the object's ``size``; squares and triangles are inscribed
in that disc, so one non-overlap rule covers all shapes conservatively.

Figure validity is reported as data (a ValidationReport), never raised:
downstream samplers and editors need to *ask* whether a candidate is
valid without try/except control flow. Config problems, by contrast,
raise ConfigError at construction time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

# Default closed vocabularies, kept in sorted order so every iteration
# over them is deterministic. A UniverseConfig may extend the colors
# (any lowercase CSS-ish name renders fine); shapes are fixed to the
# three the geometry helpers know how to draw.
DEFAULT_SHAPES: tuple[str, ...] = ("circle", "square", "triangle")
DEFAULT_COLORS: tuple[str, ...] = ("blue", "red", "yellow")
KNOWN_SHAPES: frozenset[str] = frozenset(DEFAULT_SHAPES)

SIZE_WORDS: tuple[str, ...] = ("small", "big")


@dataclass(frozen=True)
class ObjectSpec:
    """One geometric object: shape, color, size, and center position.

    ``size`` is the characteristic diameter in canvas units; ``x``/``y``
    are the center, with (0, 0) the top-left corner of the unit canvas.
    """

    shape: str
    color: str
    size: float
    x: float
    y: float

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "color": self.color,
            "size": self.size,
            "x": self.x,
            "y": self.y,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectSpec":
        return cls(
            shape=str(d["shape"]),
            color=str(d["color"]),
            size=float(d["size"]),
            x=float(d["x"]),
            y=float(d["y"]),
        )


@dataclass(frozen=True)
class Figure:
    """An ordered list of objects on the unit canvas.

    The order is presentation-only: no evaluation result may depend on
    it. It exists so rendering and serialization are reproducible.
    """

    objects: tuple[ObjectSpec, ...]

    def __post_init__(self):
        if not isinstance(self.objects, tuple):
            object.__setattr__(self, "objects", tuple(self.objects))

    def __len__(self) -> int:
        return len(self.objects)

    def to_dict(self) -> dict:
        return {"objects": [o.to_dict() for o in self.objects]}

    @classmethod
    def from_objects(cls, objs: Iterable[ObjectSpec]) -> "Figure":
        return cls(objects=tuple(objs))


@dataclass(frozen=True)
class UniverseConfig:
    """Sampling universe: object count range, vocabularies, size band,
    small/big boundary, packing gap, and the default seed.

    ``small_big_threshold`` resolves the words "small" and "big" in
    statements: small means size < threshold, big means size >= it.
    """

    n_min: int = 1
    n_max: int = 25
    allowed_shapes: tuple[str, ...] = DEFAULT_SHAPES
    allowed_colors: tuple[str, ...] = DEFAULT_COLORS
    size_min: float = 0.05
    size_max: float = 0.15
    small_big_threshold: float = 0.10
    min_gap: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "allowed_shapes", tuple(sorted(set(self.allowed_shapes))))
        object.__setattr__(self, "allowed_colors", tuple(sorted(set(self.allowed_colors))))
        if not (1 <= self.n_min <= self.n_max):
            raise ConfigError(f"need 1 <= n_min <= n_max, got {self.n_min}..{self.n_max}")
        if not self.allowed_shapes:
            raise ConfigError("allowed_shapes must be non-empty")
        unknown = set(self.allowed_shapes) - KNOWN_SHAPES
        if unknown:
            raise ConfigError(f"unknown shapes {sorted(unknown)}; known: {sorted(KNOWN_SHAPES)}")
        if not self.allowed_colors:
            raise ConfigError("allowed_colors must be non-empty")
        for c in self.allowed_colors:
            if not c or not c.islower():
                raise ConfigError(f"color names must be lowercase words, got {c!r}")
        if not (0.0 < self.size_min <= self.size_max <= 1.0):
            raise ConfigError(
                f"need 0 < size_min <= size_max <= 1, got {self.size_min}..{self.size_max}"
            )
        if self.small_big_threshold <= 0.0:
            raise ConfigError("small_big_threshold must be positive")
        if self.min_gap < 0.0:
            raise ConfigError("min_gap must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_min": self.n_min,
            "n_max": self.n_max,
            "allowed_shapes": list(self.allowed_shapes),
            "allowed_colors": list(self.allowed_colors),
            "size_min": self.size_min,
            "size_max": self.size_max,
            "small_big_threshold": self.small_big_threshold,
            "min_gap": self.min_gap,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UniverseConfig":
        return cls(
            n_min=int(d["n_min"]),
            n_max=int(d["n_max"]),
            allowed_shapes=tuple(d["allowed_shapes"]),
            allowed_colors=tuple(d["allowed_colors"]),
            size_min=float(d["size_min"]),
            size_max=float(d["size_max"]),
            small_big_threshold=float(d["small_big_threshold"]),
            min_gap=float(d["min_gap"]),
            seed=int(d["seed"]),
        )


DEFAULT_UNIVERSE = UniverseConfig()


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    """One broken rule; ``objects`` lists the offending indices."""

    rule: str
    objects: tuple[int, ...]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def object_distance(a: ObjectSpec, b: ObjectSpec) -> float:
    """Euclidean distance between two object centers."""
    return math.hypot(a.x - b.x, a.y - b.y)


def validate_figure(fig: Figure, universe: UniverseConfig | None = None) -> ValidationReport:
    """Check a figure against its universe; violations are returned, not raised.

    Rules: object count inside [n_min, n_max], vocabulary membership,
    size inside the universe band, no cropping at the border, and
    pairwise non-overlap of bounding discs with at least min_gap of
    clearance.
    """
    u = universe or DEFAULT_UNIVERSE
    out: list[Violation] = []
    n = len(fig.objects)
    if not (u.n_min <= n <= u.n_max):
        out.append(Violation("count", (), f"{n} objects outside [{u.n_min}, {u.n_max}]"))
    for i, o in enumerate(fig.objects):
        if o.shape not in u.allowed_shapes:
            out.append(Violation("shape-vocabulary", (i,), f"shape {o.shape!r} not allowed"))
        if o.color not in u.allowed_colors:
            out.append(Violation("color-vocabulary", (i,), f"color {o.color!r} not allowed"))
        if not (0.0 < o.size <= 1.0):
            out.append(Violation("size-bounds", (i,), f"size {o.size} outside (0, 1]"))
        elif not (u.size_min <= o.size <= u.size_max):
            out.append(
                Violation("size-range", (i,), f"size {o.size} outside [{u.size_min}, {u.size_max}]")
            )
        half = o.size / 2.0
        if not (half <= o.x <= 1.0 - half and half <= o.y <= 1.0 - half):
            out.append(Violation("cropped", (i,), f"disc of object {i} leaves the canvas"))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = fig.objects[i], fig.objects[j]
            need = (a.size + b.size) / 2.0 + u.min_gap
            d = object_distance(a, b)
            if d < need:
                out.append(Violation("overlap", (i, j), f"distance {d:.4f} < required {need:.4f}"))
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# shape geometry (shared by rendering and region containment)


def shape_vertices(shape: str, cx: float, cy: float, size: float) -> tuple[tuple[float, float], ...]:
    """Vertices of a polygon shape inscribed in its bounding disc.

    Squares are axis-aligned; triangles are equilateral with the apex
    pointing up (toward smaller y). Circles have no vertices.
    """
    r = size / 2.0
    if shape == "square":
        h = r / math.sqrt(2.0)
        return ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h))
    if shape == "triangle":
        w = r * math.sqrt(3.0) / 2.0
        return ((cx, cy - r), (cx + w, cy + r / 2.0), (cx - w, cy + r / 2.0))
    raise ValueError(f"shape {shape!r} has no polygon outline")


def shape_area(shape: str, size: float) -> float:
    """Exact area of a shape of the given characteristic size."""
    r = size / 2.0
    if shape == "circle":
        return math.pi * r * r
    if shape == "square":
        return 2.0 * r * r
    if shape == "triangle":
        return 3.0 * math.sqrt(3.0) / 4.0 * r * r
    raise ValueError(f"unknown shape {shape!r}")


def contains_point(shape: str, cx: float, cy: float, size: float, px: float, py: float) -> bool:
    """Inclusive point-in-shape test for one point."""
    r = size / 2.0
    if shape == "circle":
        return (px - cx) ** 2 + (py - cy) ** 2 <= r * r
    verts = shape_vertices(shape, cx, cy, size)
    pos = neg = False
    m = len(verts)
    for k in range(m):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % m]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross > 0:
            pos = True
        elif cross < 0:
            neg = True
    return not (pos and neg)


def contains_points(
    shape: str, cx: float, cy: float, size: float, px: np.ndarray, py: np.ndarray
) -> np.ndarray:
    """Vectorized inclusive point-in-shape test (same rule as contains_point)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    r = size / 2.0
    if shape == "circle":
        return (px - cx) ** 2 + (py - cy) ** 2 <= r * r
    verts = shape_vertices(shape, cx, cy, size)
    pos = np.zeros(px.shape, dtype=bool)
    neg = np.zeros(px.shape, dtype=bool)
    m = len(verts)
    for k in range(m):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % m]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        pos |= cross > 0
        neg |= cross < 0
    return ~(pos & neg)
