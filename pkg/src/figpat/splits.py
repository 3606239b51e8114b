"""Compositional train/test splits.

A record pairs a statement with a figure. Atoms are the primitive
units both sides of a split should share: predicate names (left_of,
touches, circular, count, ...) plus attribute values written as
"attr:value" tokens, harvested from the statement and from the figure
objects. Compounds are the ways atoms combine: every AND/OR/NOT
subtree of the statement's boolean skeleton up to a height cap,
keyed by canonical form. Leaves of the skeleton (count comparisons,
quantifiers, gestalt tests) count as height-0 compounds and keep
their full internal structure in the key.

Divergence between the two sides of a split uses the Chernoff
coefficient: D_alpha(p, q) = 1 - sum_k p_k^alpha q_k^(1-alpha).
A compositional split keeps atom divergence near 0 while pushing
compound divergence toward 1. design_split searches for such a split
by greedy pairwise swaps under an atom-divergence cap.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .dsl import (
    AttrTest,
    CountExpr,
    GestaltTest,
    SideTest,
    SpatialTest,
    Statement,
    And,
    Not,
    Or,
    canonical_key,
    iter_nodes,
)
from .errors import ConfigError, Infeasible, InvalidAlpha
from .model import DEFAULT_UNIVERSE, Figure, UniverseConfig
from .sampler import child_rng

_STREAM_SPLIT = 4

DEFAULT_ALPHA_ATOMS = 0.5
DEFAULT_ALPHA_COMPOUNDS = 0.1
DEFAULT_COMPOUND_DEPTH = 2
DEFAULT_ATOM_CAP = 0.02

Distribution = Mapping[str, float]


def chernoff_divergence(p: Distribution, q: Distribution, alpha: float = 0.5) -> float:
    """1 - sum p^alpha q^(1-alpha) over the union support, after
    normalizing both sides. Ranges from 0 (identical) to 1 (disjoint).
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidAlpha(f"alpha must lie strictly between 0 and 1, got {alpha}")
    pt = float(sum(p.values()))
    qt = float(sum(q.values()))
    if pt <= 0.0 and qt <= 0.0:
        return 0.0
    if pt <= 0.0 or qt <= 0.0:
        return 1.0
    bc = 0.0
    for key in p.keys() | q.keys():
        pv = p.get(key, 0.0) / pt
        qv = q.get(key, 0.0) / qt
        if pv > 0.0 and qv > 0.0:
            bc += pv**alpha * qv ** (1.0 - alpha)
    return min(1.0, max(0.0, 1.0 - bc))


# --------------------------------------------------------------------------
# profiles


def _size_word(size: float, threshold: float) -> str:
    return "small" if size < threshold else "big"


def atom_profile(
    statement: Statement,
    figure: Figure | None = None,
    *,
    universe: UniverseConfig | None = None,
) -> Counter:
    """Multiset of primitive tokens in a record."""
    u = universe or DEFAULT_UNIVERSE
    out: Counter = Counter()
    for node in iter_nodes(statement.root):
        if isinstance(node, AttrTest):
            out[f"{node.attr}:{node.value}"] += 1
        elif isinstance(node, SpatialTest):
            out[node.relation.lower()] += 1
        elif isinstance(node, SideTest):
            out[node.side.lower()] += 1
        elif isinstance(node, GestaltTest):
            out[node.concept.lower()] += 1
        elif isinstance(node, CountExpr):
            out["count"] += 1
    if figure is not None:
        for o in figure.objects:
            out[f"shape:{o.shape}"] += 1
            out[f"color:{o.color}"] += 1
            out[f"size:{_size_word(o.size, u.small_big_threshold)}"] += 1
    return out


def _skeleton(node, acc: list[tuple[str, int]]) -> int:
    """Record (canonical key, height) for every boolean-skeleton node,
    returning the node's height. Quantifier bodies are internal to
    their leaf and are not walked."""
    if isinstance(node, (And, Or)):
        h = 1 + max(_skeleton(c, acc) for c in node.children)
    elif isinstance(node, Not):
        h = 1 + _skeleton(node.child, acc)
    else:
        h = 0
    acc.append((canonical_key(node), h))
    return h


def compound_profile(statement: Statement, *, depth: int = DEFAULT_COMPOUND_DEPTH) -> Counter:
    """Multiset of canonical skeleton subtrees of height <= depth."""
    if depth < 0:
        raise ConfigError(f"depth must be >= 0, got {depth}")
    acc: list[tuple[str, int]] = []
    _skeleton(statement.root, acc)
    return Counter(key for key, h in acc if h <= depth)


@dataclass(frozen=True)
class SplitItem:
    """One record eligible for splitting."""

    id: str
    statement: Statement
    figure: Figure | None = None


def _profiles(
    items: Sequence[SplitItem],
    depth: int,
    universe: UniverseConfig | None,
) -> tuple[list[Counter], list[Counter]]:
    """Per-item atom and compound profiles, index-aligned with items."""
    atoms = [atom_profile(it.statement, it.figure, universe=universe) for it in items]
    compounds = [compound_profile(it.statement, depth=depth) for it in items]
    return atoms, compounds


def _merge(profiles: Iterable[Counter]) -> Counter:
    out: Counter = Counter()
    for p in profiles:
        out.update(p)
    return out


def _normalize(counter: Counter) -> dict[str, float]:
    total = float(sum(counter.values()))
    if total <= 0.0:
        return {}
    return {k: v / total for k, v in sorted(counter.items())}


def extract_distributions(
    items: Sequence[SplitItem],
    *,
    depth: int = DEFAULT_COMPOUND_DEPTH,
    universe: UniverseConfig | None = None,
) -> tuple[dict[str, float], dict[str, float]]:
    """Pooled, normalized atom and compound distributions of a record
    set. Frequencies are nonnegative and sum to 1 per distribution."""
    atoms, compounds = _profiles(items, depth, universe)
    return _normalize(_merge(atoms)), _normalize(_merge(compounds))


# --------------------------------------------------------------------------
# split design


@dataclass(frozen=True)
class SplitResult:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    atom_divergence: float
    compound_divergence: float
    history: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "atom_divergence": self.atom_divergence,
            "compound_divergence": self.compound_divergence,
        }


class _State:
    """Mutable aggregates for one candidate split.

    Records are grouped by profile fingerprint: two records with equal
    atom and compound profiles are interchangeable for divergence, so
    swap candidates are picked per fingerprint pair, not per record
    pair. That makes the last swap toward a rare profile as findable as
    the first.
    """

    def __init__(self, atoms, compounds, in_test):
        self.atoms = atoms
        self.compounds = compounds
        self.in_test = list(in_test)
        self.a_train: Counter = Counter()
        self.a_test: Counter = Counter()
        self.c_train: Counter = Counter()
        self.c_test: Counter = Counter()
        fp_ids: dict[tuple, int] = {}
        self.fp: list[int] = []
        for a, c in zip(atoms, compounds):
            key = (tuple(sorted(a.items())), tuple(sorted(c.items())))
            self.fp.append(fp_ids.setdefault(key, len(fp_ids)))
        self.fp_train: list[set[int]] = [set() for _ in range(len(fp_ids))]
        self.fp_test: list[set[int]] = [set() for _ in range(len(fp_ids))]
        for i, t in enumerate(self.in_test):
            if t:
                self.a_test.update(atoms[i])
                self.c_test.update(compounds[i])
                self.fp_test[self.fp[i]].add(i)
            else:
                self.a_train.update(atoms[i])
                self.c_train.update(compounds[i])
                self.fp_train[self.fp[i]].add(i)

    def swap(self, i: int, j: int) -> None:
        """Move train record i to test and test record j to train."""
        self._move(i, to_test=True)
        self._move(j, to_test=False)

    def candidate_pairs(self) -> list[tuple[int, int]]:
        """One representative (train record, test record) per pair of
        distinct fingerprints, in a deterministic order."""
        train_reps = [min(s) for s in self.fp_train if s]
        test_reps = [min(s) for s in self.fp_test if s]
        return [
            (i, j)
            for i in train_reps
            for j in test_reps
            if self.fp[i] != self.fp[j]
        ]

    def _move(self, k: int, to_test: bool) -> None:
        src_a, dst_a = (self.a_train, self.a_test) if to_test else (self.a_test, self.a_train)
        src_c, dst_c = (self.c_train, self.c_test) if to_test else (self.c_test, self.c_train)
        for key, n in self.atoms[k].items():
            src_a[key] -= n
            if src_a[key] <= 0:
                del src_a[key]
            dst_a[key] += n
        for key, n in self.compounds[k].items():
            src_c[key] -= n
            if src_c[key] <= 0:
                del src_c[key]
            dst_c[key] += n
        if to_test:
            self.fp_train[self.fp[k]].discard(k)
            self.fp_test[self.fp[k]].add(k)
        else:
            self.fp_test[self.fp[k]].discard(k)
            self.fp_train[self.fp[k]].add(k)
        self.in_test[k] = to_test

    def divergences(self, alpha_atoms: float, alpha_compounds: float) -> tuple[float, float]:
        return (
            chernoff_divergence(self.a_train, self.a_test, alpha_atoms),
            chernoff_divergence(self.c_train, self.c_test, alpha_compounds),
        )


def _score(da: float, dc: float, atom_cap: float) -> float:
    return dc - 10.0 * max(0.0, da - atom_cap)


def design_split(
    items: Sequence[SplitItem],
    *,
    seed: int = 0,
    test_fraction: float = 0.5,
    atom_cap: float = DEFAULT_ATOM_CAP,
    alpha_atoms: float = DEFAULT_ALPHA_ATOMS,
    alpha_compounds: float = DEFAULT_ALPHA_COMPOUNDS,
    depth: int = DEFAULT_COMPOUND_DEPTH,
    restarts: int = 4,
    patience: int = 150,
    candidates: int = 48,
    target_compound: float | None = None,
    universe: UniverseConfig | None = None,
) -> SplitResult:
    """Search for a split maximizing compound divergence while keeping
    atom divergence under atom_cap.

    Greedy hill climb over pairwise train/test swaps, restarted from
    several random partitions. Each restart first repairs the atom cap
    (swaps that lower atom divergence), then climbs on the penalized
    score. Raises Infeasible when a positive target_compound is asked
    for but every record shares one compound profile, so no split can
    separate them.
    """
    n = len(items)
    if n < 10:
        raise ConfigError(f"need at least 10 records to design a split, got {n}")
    ids = [it.id for it in items]
    if len(set(ids)) != n:
        raise ConfigError("record ids must be unique")
    if not (0.0 <= atom_cap <= 1.0):
        raise ConfigError(f"atom_cap must lie in [0, 1], got {atom_cap}")
    if target_compound is not None and not (0.0 <= target_compound <= 1.0):
        raise ConfigError(f"target_compound must lie in [0, 1], got {target_compound}")
    n_test = int(round(test_fraction * n))
    if not (1 <= n_test <= n - 1):
        raise ConfigError(f"test_fraction {test_fraction} leaves an empty side for {n} records")
    atoms, compounds = _profiles(items, depth, universe)

    fingerprints = {tuple(sorted(c.items())) for c in compounds}
    if len(fingerprints) == 1 and target_compound is not None and target_compound > 0.0:
        raise Infeasible(
            "all records share one compound profile; no split can reach "
            f"compound divergence {target_compound}"
        )

    best_state: list[bool] | None = None
    best_da = 0.0
    best_dc = -1.0
    best_score = -float("inf")
    history: list[tuple[int, float]] = []
    step = 0

    for restart in range(max(1, restarts)):
        rng = child_rng(seed, _STREAM_SPLIT, restart)
        order = rng.permutation(n)
        in_test = [False] * n
        for k in order[:n_test]:
            in_test[int(k)] = True
        state = _State(atoms, compounds, in_test)
        da, dc = state.divergences(alpha_atoms, alpha_compounds)

        # phase 1: repair the atom cap
        stall = 0
        while da > atom_cap and stall < patience:
            i, j, nda, ndc, exhaustive = _best_swap(
                state, rng, candidates, alpha_atoms, alpha_compounds, minimize_atoms=True
            )
            if i is None or nda >= da:
                if exhaustive:
                    break
                stall += 1
                continue
            state.swap(i, j)
            da, dc = nda, ndc
            stall = 0

        # phase 2: climb on penalized compound divergence
        score = _score(da, dc, atom_cap)
        stall = 0
        while stall < patience:
            i, j, nda, ndc, exhaustive = _best_swap(
                state, rng, candidates, alpha_atoms, alpha_compounds, minimize_atoms=False,
                atom_cap=atom_cap,
            )
            step += 1
            if i is None:
                stall += 1
                continue
            nscore = _score(nda, ndc, atom_cap)
            if nscore <= score + 1e-12:
                if exhaustive:
                    break
                stall += 1
                continue
            state.swap(i, j)
            da, dc, score = nda, ndc, nscore
            stall = 0
            history.append((step, dc))
            if target_compound is not None and dc >= target_compound and da <= atom_cap:
                break

        if score > best_score:
            best_score = score
            best_da, best_dc = da, dc
            best_state = list(state.in_test)
        if target_compound is not None and best_dc >= target_compound and best_da <= atom_cap:
            break

    assert best_state is not None
    train_ids = tuple(ids[k] for k in range(n) if not best_state[k])
    test_ids = tuple(ids[k] for k in range(n) if best_state[k])
    return SplitResult(train_ids, test_ids, best_da, best_dc, tuple(history))


def _best_swap(
    state: _State,
    rng,
    candidates: int,
    alpha_atoms: float,
    alpha_compounds: float,
    *,
    minimize_atoms: bool,
    atom_cap: float = DEFAULT_ATOM_CAP,
):
    """Return the best swap among candidate fingerprint pairs.

    All pairs are scored when there are at most `candidates` of them
    (exact steepest ascent); larger pools are subsampled."""
    pairs = state.candidate_pairs()
    if not pairs:
        return (None, None, 0.0, 0.0, True)
    exhaustive = len(pairs) <= candidates
    if not exhaustive:
        picked = rng.choice(len(pairs), size=candidates, replace=False)
        pairs = [pairs[int(k)] for k in picked]
    best = (None, None, 0.0, 0.0)
    best_key = -float("inf")
    for i, j in pairs:
        state.swap(i, j)
        da, dc = state.divergences(alpha_atoms, alpha_compounds)
        state.swap(j, i)  # revert
        key = -da if minimize_atoms else _score(da, dc, atom_cap)
        if key > best_key:
            best_key = key
            best = (i, j, da, dc)
    return best + (exhaustive,)
