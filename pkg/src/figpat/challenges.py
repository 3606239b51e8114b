"""Built-in challenge universes and generators.

Challenge 1 hides its ground truth in latent regions: each figure
carries 1-3 big virtual shapes, every small object belongs to one
region, sits inside its outline, never shares the region's shape, and
draws its color from the region's two-color palette (square: blue/red,
triangle: yellow/red, circle: yellow/blue). The regions ship as
metadata so oracles can re-check membership exactly.

Challenge 2 fixes the geometry completely (nine equal circles on a
3x3 grid at {0.25, 0.5, 0.75}^2) and leaves only color free; challenge
3 allows any arrangement of equal-size blue and yellow circles. Both
expect the experimenter to plug in the statement under study.

The worked definitions example bundles a ground-truth statement (two
disjoint same-shape pairs, one pair sharing its color, the other not)
with the classic wrong-but-plausible hypothesis about triangles and
circles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .dsl import Statement, parse_statement
from .errors import ConfigError, PlacementExhausted
from .model import (
    DEFAULT_COLORS,
    Figure,
    ObjectSpec,
    UniverseConfig,
    ValidationReport,
    Violation,
    contains_point,
    shape_vertices,
)
from .sampler import (
    Pattern,
    child_rng,
    place_objects,
    register_figure_sampler,
    register_positive_generator,
)

# region palette: which member colors each big shape admits
COLOR_PAIRS: Mapping[str, frozenset[str]] = MappingProxyType(
    {
        "square": frozenset({"blue", "red"}),
        "triangle": frozenset({"yellow", "red"}),
        "circle": frozenset({"yellow", "blue"}),
    }
)

# reserved statement id under which challenge-1 datasets record their
# latent-rule ground truth (it has no statement form)
LATENT_STATEMENT_ID = "challenge1-latent"

_STREAM_CH1 = 10
_STREAM_CORRUPT = 11

CHALLENGE_IDS = ("definitions-example", "challenge-1", "challenge-2", "challenge-3")


# --------------------------------------------------------------------------
# challenge 1: latent regions


@dataclass(frozen=True)
class LatentRegion:
    """A big virtual shape plus the indices of its member objects."""

    shape: str
    x: float
    y: float
    size: float
    members: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "x": self.x,
            "y": self.y,
            "size": self.size,
            "members": list(self.members),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatentRegion":
        return cls(
            shape=str(d["shape"]),
            x=float(d["x"]),
            y=float(d["y"]),
            size=float(d["size"]),
            members=tuple(int(i) for i in d["members"]),
        )


@dataclass(frozen=True)
class Challenge1Config:
    """Knobs for the latent-region generator. placement chooses whether
    members scatter over the region interior or along its outline."""

    regions_min: int = 1
    regions_max: int = 3
    members_min: int = 2
    members_max: int = 5
    region_size_min: float = 0.34
    region_size_max: float = 0.48
    region_gap: float = 0.10
    placement: str = "interior"  # or "outline"
    max_tries: int = 400

    def __post_init__(self):
        if not (1 <= self.regions_min <= self.regions_max):
            raise ConfigError("need 1 <= regions_min <= regions_max")
        if not (1 <= self.members_min <= self.members_max):
            raise ConfigError("need 1 <= members_min <= members_max")
        if self.placement not in ("interior", "outline"):
            raise ConfigError(f"placement must be interior or outline, got {self.placement!r}")
        if self.region_gap <= 0.08:
            # two members of max default size 0.08 must never overlap
            # across regions, so the inter-region clearance stays above
            # one member diameter
            raise ConfigError("region_gap must exceed 0.08")


CH1_UNIVERSE = UniverseConfig(
    n_min=2,
    n_max=15,
    size_min=0.04,
    size_max=0.08,
    small_big_threshold=0.20,
    min_gap=0.005,
)


def point_in_region(region: LatentRegion, px: float, py: float) -> bool:
    """Exact, inclusive containment of a point in the region outline."""
    return contains_point(region.shape, region.x, region.y, region.size, px, py)


def _region_bbox(shape: str, cx: float, cy: float, size: float) -> tuple[float, float, float, float]:
    if shape == "circle":
        r = size / 2.0
        return cx - r, cy - r, cx + r, cy + r
    xs, ys = zip(*shape_vertices(shape, cx, cy, size))
    return min(xs), min(ys), max(xs), max(ys)


def _outline_point(shape: str, cx: float, cy: float, size: float, t: float) -> tuple[float, float]:
    """Point at perimeter fraction t in [0, 1)."""
    if shape == "circle":
        ang = 2.0 * np.pi * t
        r = size / 2.0
        return cx + r * np.cos(ang), cy + r * np.sin(ang)
    verts = shape_vertices(shape, cx, cy, size)
    m = len(verts)
    lengths = []
    for k in range(m):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % m]
        lengths.append(float(np.hypot(x2 - x1, y2 - y1)))
    total = sum(lengths)
    target = t * total
    for k in range(m):
        if target <= lengths[k] or k == m - 1:
            frac = target / lengths[k]
            x1, y1 = verts[k]
            x2, y2 = verts[(k + 1) % m]
            return x1 + frac * (x2 - x1), y1 + frac * (y2 - y1)
        target -= lengths[k]
    raise AssertionError("unreachable")


def _place_regions(rng: np.random.Generator, cfg: Challenge1Config) -> list[tuple[str, float, float, float]]:
    shapes = ("circle", "square", "triangle")
    n = int(rng.integers(cfg.regions_min, cfg.regions_max + 1))
    placed: list[tuple[str, float, float, float]] = []
    for _ in range(n):
        for _ in range(cfg.max_tries):
            shape = shapes[int(rng.integers(0, 3))]
            size = float(rng.uniform(cfg.region_size_min, cfg.region_size_max))
            lo, hi = size / 2.0, 1.0 - size / 2.0
            if lo > hi:
                continue
            x = float(rng.uniform(lo, hi))
            y = float(rng.uniform(lo, hi))
            ok = True
            for _, px, py, psize in placed:
                need = (psize + size) / 2.0 + cfg.region_gap
                if (px - x) ** 2 + (py - y) ** 2 < need * need:
                    ok = False
                    break
            if ok:
                placed.append((shape, x, y, size))
                break
        else:
            raise PlacementExhausted(f"could not place region {len(placed) + 1} of {n}")
    return placed


def _place_member(
    region: tuple[str, float, float, float],
    size: float,
    others: Sequence[ObjectSpec],
    rng: np.random.Generator,
    cfg: Challenge1Config,
    universe: UniverseConfig,
) -> tuple[float, float]:
    shape, cx, cy, rsize = region
    x0, y0, x1, y1 = _region_bbox(shape, cx, cy, rsize)
    lo, hi = size / 2.0, 1.0 - size / 2.0
    for _ in range(cfg.max_tries):
        if cfg.placement == "outline":
            px, py = _outline_point(shape, cx, cy, rsize, float(rng.random()))
            # trig round-off can land the point an ulp outside the exact
            # membership test; pull it a hair toward the region center
            px = cx + (px - cx) * (1.0 - 1e-9)
            py = cy + (py - cy) * (1.0 - 1e-9)
            if not contains_point(shape, cx, cy, rsize, px, py):
                continue
        else:
            px = float(rng.uniform(x0, x1))
            py = float(rng.uniform(y0, y1))
            if not contains_point(shape, cx, cy, rsize, px, py):
                continue
        if not (lo <= px <= hi and lo <= py <= hi):
            continue
        good = True
        for o in others:
            need = (o.size + size) / 2.0 + universe.min_gap
            if (o.x - px) ** 2 + (o.y - py) ** 2 < need * need:
                good = False
                break
        if good:
            return px, py
    raise PlacementExhausted("no spot for a region member")


def _build_instance(
    rng: np.random.Generator, cfg: Challenge1Config, u: UniverseConfig
) -> tuple[Figure, tuple[LatentRegion, ...]]:
    regions_geo = _place_regions(rng, cfg)
    objects: list[ObjectSpec] = []
    regions: list[LatentRegion] = []
    for shape, cx, cy, rsize in regions_geo:
        member_shapes = tuple(s for s in ("circle", "square", "triangle") if s != shape)
        palette = sorted(COLOR_PAIRS[shape])
        k = int(rng.integers(cfg.members_min, cfg.members_max + 1))
        members: list[int] = []
        for _ in range(k):
            mshape = member_shapes[int(rng.integers(0, len(member_shapes)))]
            mcolor = palette[int(rng.integers(0, len(palette)))]
            msize = float(rng.uniform(u.size_min, u.size_max))
            px, py = _place_member((shape, cx, cy, rsize), msize, objects, rng, cfg, u)
            members.append(len(objects))
            objects.append(ObjectSpec(mshape, mcolor, msize, px, py))
        regions.append(LatentRegion(shape, cx, cy, rsize, tuple(members)))
    return Figure(tuple(objects)), tuple(regions)


def generate_challenge1(
    count: int,
    seed: int,
    config: Challenge1Config | None = None,
    universe: UniverseConfig | None = None,
) -> list[tuple[Figure, tuple[LatentRegion, ...]]]:
    """Construct challenge-1 instances; each carries its latent regions."""
    cfg = config or Challenge1Config()
    u = universe or CH1_UNIVERSE
    out: list[tuple[Figure, tuple[LatentRegion, ...]]] = []
    for i in range(count):
        rng = child_rng(seed, _STREAM_CH1, i)
        # dense layouts can dead-end; retry the whole instance with
        # fresh draws, which skews region counts slightly toward easy
        # layouts but keeps every instance valid
        for _ in range(cfg.max_tries):
            try:
                out.append(_build_instance(rng, cfg, u))
                break
            except PlacementExhausted:
                continue
        else:
            raise PlacementExhausted(
                f"challenge-1 instance {i}: no valid layout after {cfg.max_tries} restarts"
            )
    return out


def validate_challenge1(fig: Figure, regions: Sequence[LatentRegion]) -> ValidationReport:
    """Check the latent rules; violations are data, like validate_figure."""
    out: list[Violation] = []
    n = len(fig.objects)
    for r_idx, region in enumerate(regions):
        if region.shape not in COLOR_PAIRS:
            out.append(Violation("region-shape", (), f"region {r_idx} has shape {region.shape!r}"))
            continue
        palette = COLOR_PAIRS[region.shape]
        for m in region.members:
            if not (0 <= m < n):
                out.append(Violation("member-index", (m,), f"region {r_idx} lists object {m}"))
                continue
            o = fig.objects[m]
            if not point_in_region(region, o.x, o.y):
                out.append(
                    Violation("member-outside", (m,), f"object {m} center outside region {r_idx}")
                )
            if o.shape == region.shape:
                out.append(
                    Violation("member-shape", (m,), f"object {m} repeats region shape {o.shape!r}")
                )
            if o.color not in palette:
                out.append(
                    Violation(
                        "member-color",
                        (m,),
                        f"object {m} color {o.color!r} not in {sorted(palette)} for a {region.shape} region",
                    )
                )
    return ValidationReport(tuple(out))


def corrupt_challenge1(
    fig: Figure,
    regions: Sequence[LatentRegion],
    seed: int,
    index: int,
    edits: int = 1,
    universe: UniverseConfig | None = None,
) -> Figure:
    """Break the latent rules with the given number of single-object
    corruptions, keeping the figure itself valid. Used for the false
    and counterfactual classes of challenge-1 datasets."""
    u = universe or CH1_UNIVERSE
    rng = child_rng(seed, _STREAM_CORRUPT, index)
    member_map = [(r, m) for r in regions for m in r.members]
    if edits > len(member_map):
        raise ConfigError(f"cannot corrupt {edits} members, figure has {len(member_map)}")
    picks = rng.permutation(len(member_map))[:edits]
    objs = list(fig.objects)
    for p in picks:
        region, m = member_map[int(p)]
        o = objs[m]
        kind = ("recolor", "reshape", "move")[int(rng.integers(0, 3))]
        if kind == "move":
            moved = _move_out(objs, m, region, rng, u)
            if moved is not None:
                objs[m] = moved
                continue
            kind = "recolor"  # fallback: always feasible
        if kind == "recolor":
            excluded = sorted(set(DEFAULT_COLORS) - COLOR_PAIRS[region.shape])
            objs[m] = ObjectSpec(o.shape, excluded[int(rng.integers(0, len(excluded)))], o.size, o.x, o.y)
        else:
            objs[m] = ObjectSpec(region.shape, o.color, o.size, o.x, o.y)
    return Figure(tuple(objs))


def _move_out(
    objs: Sequence[ObjectSpec],
    m: int,
    region: LatentRegion,
    rng: np.random.Generator,
    u: UniverseConfig,
) -> ObjectSpec | None:
    o = objs[m]
    lo, hi = o.size / 2.0, 1.0 - o.size / 2.0
    for _ in range(100):
        x = float(rng.uniform(lo, hi))
        y = float(rng.uniform(lo, hi))
        if point_in_region(region, x, y):
            continue
        ok = True
        for j, other in enumerate(objs):
            if j == m:
                continue
            need = (other.size + o.size) / 2.0 + u.min_gap
            if (other.x - x) ** 2 + (other.y - y) ** 2 < need * need:
                ok = False
                break
        if ok:
            return ObjectSpec(o.shape, o.color, o.size, x, y)
    return None


# --------------------------------------------------------------------------
# challenge 2: nine circles on a 3x3 grid


GRID_COORDS = (0.25, 0.5, 0.75)
CH2_SIZE = 0.18

CH2_UNIVERSE = UniverseConfig(
    n_min=9,
    n_max=9,
    allowed_shapes=("circle",),
    size_min=CH2_SIZE,
    size_max=CH2_SIZE,
    small_big_threshold=0.20,
)


def challenge2_universe() -> tuple[UniverseConfig, tuple[tuple[float, float], ...]]:
    """The challenge-2 universe plus its grid layout, row-major."""
    grid = tuple((gx, gy) for gy in GRID_COORDS for gx in GRID_COORDS)
    return CH2_UNIVERSE, grid


def _sample_grid_figure(u: UniverseConfig, rng: np.random.Generator) -> Figure:
    _, grid = challenge2_universe()
    colors = [u.allowed_colors[int(i)] for i in rng.integers(0, len(u.allowed_colors), size=len(grid))]
    objs = tuple(
        ObjectSpec("circle", colors[k], CH2_SIZE, gx, gy) for k, (gx, gy) in enumerate(grid)
    )
    return Figure(objs)


def validate_challenge2(fig: Figure) -> ValidationReport:
    """Structural check: nine equal circles snapped to the grid."""
    out: list[Violation] = []
    if len(fig.objects) != 9:
        out.append(Violation("count", (), f"expected 9 objects, got {len(fig.objects)}"))
    taken: set[tuple[float, float]] = set()
    for i, o in enumerate(fig.objects):
        if o.shape != "circle":
            out.append(Violation("shape-vocabulary", (i,), f"object {i} is a {o.shape}"))
        if o.size != CH2_SIZE:
            out.append(Violation("size-range", (i,), f"object {i} size {o.size} != {CH2_SIZE}"))
        snap = (min(GRID_COORDS, key=lambda g: abs(g - o.x)), min(GRID_COORDS, key=lambda g: abs(g - o.y)))
        if abs(snap[0] - o.x) > 1e-12 or abs(snap[1] - o.y) > 1e-12:
            out.append(Violation("off-grid", (i,), f"object {i} at ({o.x}, {o.y}) is off the grid"))
        elif snap in taken:
            out.append(Violation("grid-collision", (i,), f"two objects share grid cell {snap}"))
        else:
            taken.add(snap)
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# challenge 3: equal blue and yellow circles


CH3_SIZE = 0.10

CH3_UNIVERSE = UniverseConfig(
    n_min=2,
    n_max=9,
    allowed_shapes=("circle",),
    allowed_colors=("blue", "yellow"),
    size_min=CH3_SIZE,
    size_max=CH3_SIZE,
    small_big_threshold=0.15,
    min_gap=0.01,
)


def challenge3_universe() -> UniverseConfig:
    """Only the size stays fixed and only circles in blue or yellow occur."""
    return CH3_UNIVERSE


def validate_challenge3(fig: Figure) -> ValidationReport:
    """Structural check: equal-size blue/yellow circles only."""
    out: list[Violation] = []
    for i, o in enumerate(fig.objects):
        if o.shape != "circle":
            out.append(Violation("shape-vocabulary", (i,), f"object {i} is a {o.shape}"))
        if o.color not in ("blue", "yellow"):
            out.append(Violation("color-vocabulary", (i,), f"object {i} is {o.color}"))
        if o.size != CH3_SIZE:
            out.append(Violation("size-range", (i,), f"object {i} size {o.size} != {CH3_SIZE}"))
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# worked definitions example


DEFS_UNIVERSE = UniverseConfig(n_min=4, n_max=9, min_gap=0.01)

GT_TEXT = (
    "EXISTS a, b, c, d DISTINCT IN objects : "
    "SAME_SHAPE(a, b) AND SAME_COLOR(a, b) AND SAME_SHAPE(c, d) AND NOT SAME_COLOR(c, d)"
)
H2_TEXT = (
    "COUNT(objects) = 4 "
    "AND COUNT(objects WHERE shape = triangle) = 2 "
    "AND COUNT(objects WHERE shape = circle) = 2 "
    "AND (EXISTS a, b DISTINCT IN objects WHERE shape = triangle : NOT SAME_COLOR(a, b)) "
    "AND (EXISTS c, d DISTINCT IN objects WHERE shape = circle : SAME_COLOR(c, d))"
)


def definitions_example() -> tuple[Statement, Statement]:
    """The worked ground truth and the plausible-but-wrong hypothesis.

    gt: two disjoint pairs of same-shape objects, one pair sharing its
    color, the other pair not. h2: exactly two triangles of different
    color plus two circles of the same color. Every h2 figure satisfies
    gt, but not the other way around.
    """
    return parse_statement(GT_TEXT, DEFS_UNIVERSE), parse_statement(H2_TEXT, DEFS_UNIVERSE)


def _gen_defs_gt(pattern: Pattern, rng: np.random.Generator) -> Figure:
    u = pattern.universe
    n = int(rng.integers(max(4, u.n_min), u.n_max + 1))
    shapes_v = u.allowed_shapes
    colors_v = u.allowed_colors
    s1 = shapes_v[int(rng.integers(0, len(shapes_v)))]
    c1 = colors_v[int(rng.integers(0, len(colors_v)))]
    s2 = shapes_v[int(rng.integers(0, len(shapes_v)))]
    c2 = colors_v[int(rng.integers(0, len(colors_v)))]
    c3 = colors_v[int(rng.integers(0, len(colors_v)))]
    while c3 == c2:
        c3 = colors_v[int(rng.integers(0, len(colors_v)))]
    attrs = [(s1, c1), (s1, c1), (s2, c2), (s2, c3)]
    for _ in range(n - 4):
        attrs.append(
            (
                shapes_v[int(rng.integers(0, len(shapes_v)))],
                colors_v[int(rng.integers(0, len(colors_v)))],
            )
        )
    order = rng.permutation(len(attrs))
    sized = [
        (attrs[int(k)][0], attrs[int(k)][1], float(rng.uniform(u.size_min, u.size_max)))
        for k in order
    ]
    return place_objects(sized, u, rng)


def _gen_defs_h2(pattern: Pattern, rng: np.random.Generator) -> Figure:
    u = pattern.universe
    colors_v = u.allowed_colors
    t1 = colors_v[int(rng.integers(0, len(colors_v)))]
    t2 = colors_v[int(rng.integers(0, len(colors_v)))]
    while t2 == t1:
        t2 = colors_v[int(rng.integers(0, len(colors_v)))]
    cc = colors_v[int(rng.integers(0, len(colors_v)))]
    attrs = [("triangle", t1), ("triangle", t2), ("circle", cc), ("circle", cc)]
    order = rng.permutation(len(attrs))
    sized = [
        (attrs[int(k)][0], attrs[int(k)][1], float(rng.uniform(u.size_min, u.size_max)))
        for k in order
    ]
    return place_objects(sized, u, rng)


register_figure_sampler("grid3x3", _sample_grid_figure)
register_positive_generator("definitions-gt", _gen_defs_gt)
register_positive_generator("definitions-h2", _gen_defs_h2)


# --------------------------------------------------------------------------
# challenge registry


@dataclass(frozen=True)
class ChallengeSpec:
    """Bundle handed to the CLI: universe, ground truth (None when the
    truth is the latent-region rule set), any bundled hypotheses, and
    the sampler plug-ins patterns under this challenge should use."""

    id: str
    universe: UniverseConfig
    gt: Statement | None
    hypotheses: Mapping[str, Statement] = field(default_factory=dict)
    figure_sampler: str | None = None
    positive_generator: str | None = None
    edit_kinds: tuple[str, ...] | None = None
    requires_statement: bool = False
    max_edits: int = 1


def get_challenge(challenge_id: str) -> ChallengeSpec:
    if challenge_id == "definitions-example":
        gt, h2 = definitions_example()
        return ChallengeSpec(
            id=challenge_id,
            universe=DEFS_UNIVERSE,
            gt=gt,
            hypotheses={"h2": h2},
            positive_generator="definitions-gt",
            max_edits=2,
        )
    if challenge_id == "challenge-1":
        return ChallengeSpec(id=challenge_id, universe=CH1_UNIVERSE, gt=None)
    if challenge_id == "challenge-2":
        u, _ = challenge2_universe()
        return ChallengeSpec(
            id=challenge_id,
            universe=u,
            gt=None,
            figure_sampler="grid3x3",
            edit_kinds=("recolor",),
            requires_statement=True,
        )
    if challenge_id == "challenge-3":
        return ChallengeSpec(
            id=challenge_id,
            universe=challenge3_universe(),
            gt=None,
            edit_kinds=("recolor", "move", "add", "remove"),
            requires_statement=True,
            max_edits=2,
        )
    raise ConfigError(f"unknown challenge {challenge_id!r}; available: {', '.join(CHALLENGE_IDS)}")
