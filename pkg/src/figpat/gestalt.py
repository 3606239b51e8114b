"""Gestalt detectors: circular arrangement, mirror symmetry, proximity
clustering, and the flower composite.

All detectors are pure functions of object centers and attributes,
invariant under object order, and tolerance-driven through one config
block. Degenerate geometry (for the circle fit: collinear centers) is
reported in the result, never raised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import pdist

from .errors import ConfigError
from .model import ObjectSpec

_COLLINEAR_EPS = 1e-9
_MISMATCH_COST = 1e9


@dataclass(frozen=True)
class GestaltConfig:
    """Tolerances for every detector.

    circular_residual_tol: max RMS radial residual, relative to the
        fitted radius.
    symmetry_match_tol: max center error under reflection, canvas units.
    symmetry_axis_steps: number of axis directions swept over half a turn.
    cluster_eps_factor: linkage threshold as a multiple of mean object size.
    """

    circular_residual_tol: float = 0.08
    symmetry_match_tol: float = 0.05
    symmetry_axis_steps: int = 36
    cluster_eps_factor: float = 1.5

    def __post_init__(self):
        if self.circular_residual_tol <= 0:
            raise ConfigError("circular_residual_tol must be positive")
        if self.symmetry_match_tol <= 0:
            raise ConfigError("symmetry_match_tol must be positive")
        if self.symmetry_axis_steps < 4:
            raise ConfigError("symmetry_axis_steps must be at least 4")
        if self.cluster_eps_factor <= 0:
            raise ConfigError("cluster_eps_factor must be positive")


DEFAULT_GESTALT = GestaltConfig()


@dataclass(frozen=True)
class CircleFit:
    """Outcome of the circular-arrangement test."""

    is_circular: bool
    center: tuple[float, float] | None
    radius: float | None
    rms_residual: float
    note: str = ""


def _centers(objs: Sequence[ObjectSpec]) -> np.ndarray:
    return np.array([[o.x, o.y] for o in objs], dtype=float)


def is_circular_arrangement(
    objs: Sequence[ObjectSpec], config: GestaltConfig | None = None
) -> CircleFit:
    """Least-squares circle fit over object centers (algebraic, one shot).

    True when the RMS radial residual is within tol * radius and the
    ring is larger than the mean object size, so tight blobs do not
    count. Collinear centers make the fit singular; that case comes
    back as not circular with a note.
    """
    cfg = config or DEFAULT_GESTALT
    if len(objs) < 3:
        raise ValueError("need at least 3 objects for a circle fit")
    pts = _centers(objs)
    centered = pts - pts.mean(axis=0)
    # smallest singular value ~ 0 means the centers sit on a line
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] < _COLLINEAR_EPS:
        return CircleFit(False, None, None, math.inf, note="collinear centers, fit singular")
    x, y = pts[:, 0], pts[:, 1]
    a_mat = np.column_stack([2.0 * x, 2.0 * y, np.ones(len(objs))])
    rhs = x * x + y * y
    (cx, cy, c), *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    radius = math.sqrt(max(c + cx * cx + cy * cy, 0.0))
    dists = np.hypot(x - cx, y - cy)
    rms = float(np.sqrt(np.mean((dists - radius) ** 2)))
    mean_size = float(np.mean([o.size for o in objs]))
    ok = radius > 0 and rms <= cfg.circular_residual_tol * radius and radius > mean_size
    return CircleFit(ok, (float(cx), float(cy)), radius, rms)


@dataclass(frozen=True)
class SymmetryResult:
    is_symmetric: bool
    axis_angle: float | None  # radians in [0, pi); 0 is a horizontal axis
    max_error: float


def is_symmetric(objs: Sequence[ObjectSpec], config: GestaltConfig | None = None) -> SymmetryResult:
    """Mirror symmetry about some axis through the centroid.

    Sweeps symmetry_axis_steps axis directions; for each, reflects all
    centers and looks for a perfect matching where every pair sits
    within symmetry_match_tol and agrees on shape and color.
    """
    cfg = config or DEFAULT_GESTALT
    if len(objs) < 2:
        raise ValueError("need at least 2 objects for a symmetry test")
    pts = _centers(objs)
    centroid = pts.mean(axis=0)
    rel = pts - centroid
    n = len(objs)
    attr_ok = np.array(
        [[objs[i].shape == objs[j].shape and objs[i].color == objs[j].color for j in range(n)] for i in range(n)]
    )
    best_err = math.inf
    best_angle: float | None = None
    for k in range(cfg.symmetry_axis_steps):
        theta = math.pi * k / cfg.symmetry_axis_steps
        c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
        refl = np.column_stack(
            [c2 * rel[:, 0] + s2 * rel[:, 1], s2 * rel[:, 0] - c2 * rel[:, 1]]
        )
        cost = np.hypot(refl[:, None, 0] - rel[None, :, 0], refl[:, None, 1] - rel[None, :, 1])
        cost = np.where(attr_ok, cost, _MISMATCH_COST)
        rows, cols = linear_sum_assignment(cost)
        worst = float(cost[rows, cols].max())
        if worst < best_err:
            best_err = worst
            best_angle = theta
        if worst <= cfg.symmetry_match_tol:
            return SymmetryResult(True, theta, worst)
    return SymmetryResult(False, best_angle, best_err)


def cluster_by_proximity(
    objs: Sequence[ObjectSpec], config: GestaltConfig | None = None
) -> list[list[int]]:
    """Single-linkage clusters of object indices.

    Two objects join a cluster when their centers are within
    cluster_eps_factor * mean object size, directly or through a chain.
    The partition is returned sorted (clusters by smallest member,
    members ascending), so equal inputs give equal outputs.
    """
    cfg = config or DEFAULT_GESTALT
    if not objs:
        raise ValueError("need at least 1 object to cluster")
    if len(objs) == 1:
        return [[0]]
    eps = cfg.cluster_eps_factor * float(np.mean([o.size for o in objs]))
    z = linkage(pdist(_centers(objs)), method="single")
    labels = fcluster(z, t=eps, criterion="distance")
    groups: dict[int, list[int]] = {}
    for idx, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(idx)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def is_flower(objs: Sequence[ObjectSpec], config: GestaltConfig | None = None) -> bool:
    """Core-plus-petals composite: some object is the core and all other
    objects are petals of one shape and color arranged on a circle whose
    fitted center lies within symmetry_match_tol of the core.

    Fewer than 4 objects can never form a flower.
    """
    cfg = config or DEFAULT_GESTALT
    if len(objs) < 4:
        return False
    for core_idx, core in enumerate(objs):
        petals = [o for i, o in enumerate(objs) if i != core_idx]
        if len({(o.shape, o.color) for o in petals}) != 1:
            continue
        fit = is_circular_arrangement(petals, cfg)
        if not fit.is_circular or fit.center is None:
            continue
        if math.hypot(fit.center[0] - core.x, fit.center[1] - core.y) <= cfg.symmetry_match_tol:
            return True
    return False
