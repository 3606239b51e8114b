"""Figure sampling and dataset generation primitives.

Randomness: every public generator takes a root seed and derives one
child stream per output index via numpy's SeedSequence
(entropy = [seed, stream-kind], spawn_key = (index,), PCG64 underneath).
Figure i therefore never depends on how many attempts figure i-1
burned, which makes parallel and serial runs byte-identical.

The yield floor is enforced per output figure: a stream that burns more
than ceil(10 / yield_floor) attempts without an accept raises
YieldTooLow, which is the deterministic, parallel-stable reading of
"acceptance rate fell below the floor".
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .dsl import Statement, evaluate
from .errors import (
    ConfigError,
    GeneratorUnsound,
    NoNearMissFound,
    PlacementExhausted,
    YieldTooLow,
)
from .model import Figure, ObjectSpec, UniverseConfig, validate_figure

DEFAULT_PLACEMENT_TRIES = 200
DEFAULT_YIELD_FLOOR = 1e-4
DEFAULT_NEAR_MISS_BUDGET = 300

EDIT_KINDS = ("recolor", "reshape", "resize", "move", "add", "remove")

# stream kinds keep the positives / negatives / near-miss child streams
# of one root seed disjoint
_STREAM_BASE = 0
_STREAM_POS = 1
_STREAM_NEG = 2
_STREAM_NEAR = 3

_MASK64 = (1 << 64) - 1


def child_rng(seed: int, kind: int, index: int) -> np.random.Generator:
    """The documented stream-splitting rule: one child per output index."""
    ss = np.random.SeedSequence(entropy=[int(seed) & _MASK64, kind], spawn_key=(int(index),))
    return np.random.default_rng(ss)


def _as_rng(rng: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# --------------------------------------------------------------------------
# pattern and registries


@dataclass(frozen=True)
class Pattern:
    """A statement plus the universe its figures are sampled from.

    figure_sampler / positive_generator name optional registered
    plug-ins: the first replaces the generic placement sampler (for
    structurally constrained figure spaces like a fixed grid), the
    second constructs statement-satisfying figures directly when
    rejection would be hopeless. edit_kinds, when set, restricts which
    near-miss edits keep the figure inside the pattern's figure space.
    """

    statement: Statement
    universe: UniverseConfig
    figure_sampler: str | None = None
    positive_generator: str | None = None
    edit_kinds: tuple[str, ...] | None = None


_FIGURE_SAMPLERS: dict[str, Callable[[UniverseConfig, np.random.Generator], Figure]] = {}
_POSITIVE_GENERATORS: dict[str, Callable[[Pattern, np.random.Generator], Figure]] = {}


def register_figure_sampler(name: str, fn: Callable[[UniverseConfig, np.random.Generator], Figure]) -> None:
    _FIGURE_SAMPLERS[name] = fn


def register_positive_generator(name: str, fn: Callable[[Pattern, np.random.Generator], Figure]) -> None:
    _POSITIVE_GENERATORS[name] = fn


def _base_sample(pattern: Pattern, rng: np.random.Generator, max_tries: int) -> Figure:
    if pattern.figure_sampler is not None:
        try:
            fn = _FIGURE_SAMPLERS[pattern.figure_sampler]
        except KeyError:
            raise ConfigError(f"no figure sampler registered under {pattern.figure_sampler!r}") from None
        return fn(pattern.universe, rng)
    return sample_figure(pattern.universe, rng, max_tries=max_tries)


# --------------------------------------------------------------------------
# unconditioned sampling


def place_objects(
    attrs: Sequence[tuple[str, str, float]],
    universe: UniverseConfig,
    rng: int | np.random.Generator | None,
    max_tries: int = DEFAULT_PLACEMENT_TRIES,
) -> Figure:
    """Place objects with fixed (shape, color, size) one by one,
    redrawing each position until its bounding disc clears the canvas
    border and every earlier disc by min_gap."""
    r = _as_rng(rng)
    placed: list[ObjectSpec] = []
    for shape, color, size in attrs:
        lo = size / 2.0
        hi = 1.0 - size / 2.0
        if lo > hi:
            raise PlacementExhausted(f"size {size} cannot fit on the unit canvas")
        for _ in range(max_tries):
            x = float(r.uniform(lo, hi))
            y = float(r.uniform(lo, hi))
            good = True
            for p in placed:
                need = (p.size + size) / 2.0 + universe.min_gap
                if (p.x - x) ** 2 + (p.y - y) ** 2 < need * need:
                    good = False
                    break
            if good:
                placed.append(ObjectSpec(shape=shape, color=color, size=size, x=x, y=y))
                break
        else:
            raise PlacementExhausted(
                f"object {len(placed)} of {len(attrs)}: no non-overlapping spot in {max_tries} tries"
            )
    return Figure(tuple(placed))


def sample_figure(
    universe: UniverseConfig,
    rng: int | np.random.Generator | None = None,
    *,
    n: int | None = None,
    max_tries: int = DEFAULT_PLACEMENT_TRIES,
) -> Figure:
    """Draw one valid figure: object count uniform on [n_min, n_max]
    (unless forced), attributes uniform over the allowed sets, position
    uniform in the feasible band, rejecting overlaps."""
    r = _as_rng(rng)
    if n is None:
        n = int(r.integers(universe.n_min, universe.n_max + 1))
    shapes = [universe.allowed_shapes[i] for i in r.integers(0, len(universe.allowed_shapes), size=n)]
    colors = [universe.allowed_colors[i] for i in r.integers(0, len(universe.allowed_colors), size=n)]
    sizes = [float(s) for s in r.uniform(universe.size_min, universe.size_max, size=n)]
    return place_objects(list(zip(shapes, colors, sizes)), universe, r, max_tries)


# --------------------------------------------------------------------------
# labeled generation


@dataclass(frozen=True)
class GenerationReport:
    requested: int
    produced: int
    attempts: int
    rejection_rate: float
    seed: int


def _attempt_cap(yield_floor: float) -> int:
    if not (0.0 < yield_floor < 1.0):
        raise ConfigError(f"yield floor must be in (0, 1), got {yield_floor}")
    return max(100, math.ceil(10.0 / yield_floor))


def _run_indexed(worker: Callable[[int], object], count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(count)))


def generate_positives(
    pattern: Pattern,
    count: int,
    seed: int,
    *,
    workers: int = 1,
    yield_floor: float = DEFAULT_YIELD_FLOOR,
    placement_tries: int = DEFAULT_PLACEMENT_TRIES,
) -> tuple[list[Figure], GenerationReport]:
    """Figures satisfying the pattern's statement, plus a sampling report.

    Uses the registered constructive generator when the pattern names
    one (still verifying every figure), otherwise rejection-samples the
    base figure space.
    """
    gen = None
    if pattern.positive_generator is not None:
        try:
            gen = _POSITIVE_GENERATORS[pattern.positive_generator]
        except KeyError:
            raise ConfigError(
                f"no positive generator registered under {pattern.positive_generator!r}"
            ) from None
    cap = _attempt_cap(yield_floor)

    def one(i: int) -> tuple[Figure, int]:
        rng = child_rng(seed, _STREAM_POS, i)
        if gen is not None:
            fig = gen(pattern, rng)
            if not evaluate(pattern.statement, fig, universe=pattern.universe):
                raise GeneratorUnsound(
                    f"constructive generator {pattern.positive_generator!r} produced a non-member"
                )
            return fig, 1
        for attempt in range(1, cap + 1):
            fig = _base_sample(pattern, rng, placement_tries)
            if evaluate(pattern.statement, fig, universe=pattern.universe):
                return fig, attempt
        raise YieldTooLow(
            f"no accept in {cap} attempts for one figure; acceptance rate is below {yield_floor}"
        )

    results = _run_indexed(one, count, workers)
    figures = [fig for fig, _ in results]
    attempts = sum(a for _, a in results)
    rate = 1.0 - (count / attempts) if attempts else 0.0
    return figures, GenerationReport(count, len(figures), attempts, rate, seed)


def generate_negatives(
    pattern: Pattern,
    count: int,
    seed: int,
    *,
    positives: Sequence[Figure] | None = None,
    workers: int = 1,
    yield_floor: float = DEFAULT_YIELD_FLOOR,
    placement_tries: int = DEFAULT_PLACEMENT_TRIES,
) -> list[Figure]:
    """Figures failing the statement, with object counts matched to the
    positives: each negative aims for a count drawn from the positives'
    empirical distribution and widens to nearby counts only when its
    target stratum cannot produce a falsifying figure."""
    cap = _attempt_cap(yield_floor)
    pos_counts = sorted(len(f.objects) for f in positives) if positives else None
    u = pattern.universe

    def one(i: int) -> Figure:
        rng = child_rng(seed, _STREAM_NEG, i)
        if pattern.figure_sampler is not None:
            for _ in range(cap):
                fig = _base_sample(pattern, rng, placement_tries)
                if not evaluate(pattern.statement, fig, universe=u):
                    return fig
            raise YieldTooLow(f"no falsifying figure in {cap} attempts (structured sampler)")
        if pos_counts:
            target = int(pos_counts[int(rng.integers(0, len(pos_counts)))])
        else:
            target = int(rng.integers(u.n_min, u.n_max + 1))
        sign = 1 if rng.random() < 0.5 else -1
        candidates: list[int] = []
        for spread in range(0, u.n_max - u.n_min + 1):
            for s in ((sign, -sign) if spread else ((1,))):
                n = target + s * spread
                if u.n_min <= n <= u.n_max and n not in candidates:
                    candidates.append(n)
        per_n = max(25, cap // max(1, len(candidates)))
        for n in candidates:
            for _ in range(per_n):
                try:
                    fig = sample_figure(u, rng, n=n, max_tries=placement_tries)
                except PlacementExhausted:
                    break
                if not evaluate(pattern.statement, fig, universe=u):
                    return fig
        raise YieldTooLow(
            f"no falsifying figure across counts {candidates} ({per_n} tries each); "
            "the statement may be a tautology over this universe"
        )

    return _run_indexed(one, count, workers)


# --------------------------------------------------------------------------
# near misses


@dataclass(frozen=True)
class EditOp:
    """One atomic figure edit. index targets an existing object
    (None for add, which appends)."""

    kind: str
    index: int | None = None
    shape: str | None = None
    color: str | None = None
    size: float | None = None
    x: float | None = None
    y: float | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for key in ("index", "shape", "color", "size", "x", "y"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


def apply_edit(fig: Figure, op: EditOp, universe: UniverseConfig) -> Figure | None:
    """Apply one edit; None when the result would not validate."""
    objs = list(fig.objects)
    if op.kind == "remove":
        assert op.index is not None
        del objs[op.index]
    elif op.kind == "add":
        objs.append(ObjectSpec(shape=op.shape, color=op.color, size=op.size, x=op.x, y=op.y))
    else:
        assert op.index is not None
        o = objs[op.index]
        if op.kind == "recolor":
            o = ObjectSpec(o.shape, op.color, o.size, o.x, o.y)
        elif op.kind == "reshape":
            o = ObjectSpec(op.shape, o.color, o.size, o.x, o.y)
        elif op.kind == "resize":
            o = ObjectSpec(o.shape, o.color, op.size, o.x, o.y)
        elif op.kind == "move":
            o = ObjectSpec(o.shape, o.color, o.size, op.x, op.y)
        else:
            raise ConfigError(f"unknown edit kind {op.kind!r}")
        objs[op.index] = o
    out = Figure(tuple(objs))
    return out if validate_figure(out, universe).ok else None


def apply_edits(fig: Figure, trail: Iterable[EditOp], universe: UniverseConfig) -> Figure | None:
    cur: Figure | None = fig
    for op in trail:
        if cur is None:
            return None
        cur = apply_edit(cur, op, universe)
    return cur


def _enumerate_edits(fig: Figure, pattern: Pattern, rng: np.random.Generator) -> list[EditOp]:
    u = pattern.universe
    allowed = set(pattern.edit_kinds) if pattern.edit_kinds is not None else set(EDIT_KINDS)
    ops: list[EditOp] = []
    n = len(fig.objects)
    for i, o in enumerate(fig.objects):
        if "recolor" in allowed:
            ops.extend(EditOp("recolor", i, color=c) for c in u.allowed_colors if c != o.color)
        if "reshape" in allowed:
            ops.extend(EditOp("reshape", i, shape=s) for s in u.allowed_shapes if s != o.shape)
        if "resize" in allowed and u.size_min < u.size_max:
            ops.extend(
                EditOp("resize", i, size=float(rng.uniform(u.size_min, u.size_max)))
                for _ in range(3)
            )
        if "move" in allowed:
            lo, hi = o.size / 2.0, 1.0 - o.size / 2.0
            ops.extend(
                EditOp("move", i, x=float(rng.uniform(lo, hi)), y=float(rng.uniform(lo, hi)))
                for _ in range(3)
            )
        if "remove" in allowed and n - 1 >= max(1, u.n_min):
            ops.append(EditOp("remove", i))
    if "add" in allowed and n + 1 <= u.n_max:
        for _ in range(3):
            shape = u.allowed_shapes[int(rng.integers(0, len(u.allowed_shapes)))]
            color = u.allowed_colors[int(rng.integers(0, len(u.allowed_colors)))]
            size = float(rng.uniform(u.size_min, u.size_max))
            lo, hi = size / 2.0, 1.0 - size / 2.0
            ops.append(
                EditOp("add", None, shape=shape, color=color, size=size,
                       x=float(rng.uniform(lo, hi)), y=float(rng.uniform(lo, hi)))
            )
    perm = rng.permutation(len(ops))
    return [ops[int(k)] for k in perm]


def _near_miss_for(
    fig: Figure,
    pattern: Pattern,
    rng: np.random.Generator,
    max_edits: int,
    budget: int,
) -> tuple[Figure, tuple[EditOp, ...]] | None:
    """Depth-limited randomized search for an edit trail flipping the
    statement to false; budget counts statement evaluations."""
    frontier: list[tuple[Figure, tuple[EditOp, ...]]] = [(fig, ())]
    remaining = budget
    for depth in range(1, max_edits + 1):
        next_frontier: list[tuple[Figure, tuple[EditOp, ...]]] = []
        for base, trail in frontier:
            for op in _enumerate_edits(base, pattern, rng):
                if remaining <= 0:
                    return None
                cand = apply_edit(base, op, pattern.universe)
                if cand is None:
                    continue
                remaining -= 1
                if not evaluate(pattern.statement, cand, universe=pattern.universe):
                    return cand, trail + (op,)
                if depth < max_edits and len(next_frontier) < 10:
                    next_frontier.append((cand, trail + (op,)))
        frontier = next_frontier
        if not frontier:
            break
    return None


@dataclass(frozen=True)
class NearMiss:
    """A flipped figure, the edit trail that produced it, and the index
    of its source in the positives list, so the pair can be audited."""

    figure: Figure
    edits: tuple[EditOp, ...]
    source_index: int


def generate_near_misses(
    pattern: Pattern,
    positives: Sequence[Figure],
    seed: int,
    *,
    max_edits: int = 1,
    count: int | None = None,
    eval_budget: int = DEFAULT_NEAR_MISS_BUDGET,
    workers: int = 1,
) -> list[NearMiss]:
    """Near misses: for source positives, figures at most max_edits
    atomic edits away that fail the statement, each returned with its
    edit trail and source index. Sources are tried in index order and
    the search stops once enough flips are found, so the result is
    deterministic for a fixed seed regardless of workers. Raises
    NoNearMissFound when fewer than the requested number of sources
    could be flipped within the search budget."""
    want = len(positives) if count is None else count

    def one(i: int) -> NearMiss | None:
        rng = child_rng(seed, _STREAM_NEAR, i)
        hit = _near_miss_for(positives[i], pattern, rng, max_edits, eval_budget)
        return None if hit is None else NearMiss(hit[0], hit[1], i)

    found: list[NearMiss] = []
    n = len(positives)
    chunk = max(1, workers) * 8
    start = 0
    while start < n and len(found) < want:
        stop = min(n, start + chunk)

        def worker(k: int, base: int = start) -> NearMiss | None:
            return one(base + k)

        found.extend(r for r in _run_indexed(worker, stop - start, workers) if r is not None)
        start = stop
    if len(found) < want:
        raise NoNearMissFound(
            f"{want} near misses requested but only {len(found)} of {len(positives)} "
            f"source figures could be flipped within {eval_budget} evaluations each"
        )
    return found[:want]
