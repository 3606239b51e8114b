"""Grouping detectors: circle fit, mirror symmetry, proximity clusters,
and the flower composite. Fits are cross-checked against an independent
geometric least-squares fit and a union-find clustering oracle."""
from __future__ import annotations

import math

import numpy as np
import pytest

from figpat import ConfigError, ObjectSpec
from figpat.gestalt import (
    GestaltConfig,
    cluster_by_proximity,
    is_circular_arrangement,
    is_flower,
    is_symmetric,
)
from oracles import geometric_circle_fit, union_find_clusters


def o(shape="circle", color="red", size=0.08, x=0.5, y=0.5) -> ObjectSpec:
    return ObjectSpec(shape, color, size, x, y)


def ring(n, radius, cx=0.5, cy=0.5, size=0.08, jitter=None):
    objs = []
    for k in range(n):
        r = radius + (jitter[k % len(jitter)] if jitter else 0.0)
        t = 2.0 * math.pi * k / n
        objs.append(o(size=size, x=cx + r * math.cos(t), y=cy + r * math.sin(t)))
    return objs


class TestCircleFit:
    def test_exact_ring(self):
        fit = is_circular_arrangement(ring(12, 0.3))
        assert fit.is_circular
        assert fit.center == pytest.approx((0.5, 0.5), abs=1e-12)
        assert fit.radius == pytest.approx(0.3, abs=1e-12)
        assert fit.rms_residual < 1e-12

    def test_matches_geometric_oracle(self):
        objs = ring(12, 0.3)
        fit = is_circular_arrangement(objs)
        cx, cy, r, rms = geometric_circle_fit([(ob.x, ob.y) for ob in objs])
        assert fit.center == pytest.approx((cx, cy), abs=1e-12)
        assert fit.radius == pytest.approx(r, abs=1e-12)
        assert fit.rms_residual == pytest.approx(rms, abs=1e-12)

    def test_jittered_ring_rejected(self):
        objs = ring(8, 0.25, jitter=(0.06, -0.06))
        fit = is_circular_arrangement(objs)
        assert not fit.is_circular
        # the algebraic fit sits close to the geometric optimum
        _, _, _, rms = geometric_circle_fit([(ob.x, ob.y) for ob in objs])
        assert rms == pytest.approx(0.06, abs=1e-6)
        assert abs(fit.rms_residual - rms) < 2e-3

    def test_mild_jitter_accepted(self):
        objs = ring(10, 0.3, jitter=(0.01, -0.01))
        assert is_circular_arrangement(objs).is_circular

    def test_collinear_centers(self):
        objs = [o(x=0.2 + 0.2 * k, y=0.3 + 0.1 * k) for k in range(4)]
        fit = is_circular_arrangement(objs)
        assert not fit.is_circular
        assert fit.rms_residual == math.inf
        assert "collinear" in fit.note

    def test_tight_blob_rejected(self):
        # a perfect ring smaller than the objects should not count
        objs = ring(6, 0.03, size=0.1)
        fit = is_circular_arrangement(objs)
        assert not fit.is_circular
        assert fit.rms_residual < 1e-9  # rejected by size, not by fit

    def test_needs_three(self):
        with pytest.raises(ValueError):
            is_circular_arrangement([o(), o(x=0.2)])

    def test_tolerance_scales_with_radius(self):
        objs = ring(8, 0.25, jitter=(0.015, -0.015))
        assert not is_circular_arrangement(objs, GestaltConfig(circular_residual_tol=0.01)).is_circular
        assert is_circular_arrangement(objs, GestaltConfig(circular_residual_tol=0.2)).is_circular


class TestSymmetry:
    def corners(self, size=0.08):
        return [
            o(size=size, x=0.2, y=0.2),
            o(size=size, x=0.8, y=0.2),
            o(size=size, x=0.2, y=0.8),
            o(size=size, x=0.8, y=0.8),
        ]

    def mixed_corners(self):
        # only the main diagonal carries matching attributes, and the
        # off-diagonal pair disagrees, so no axis admits a matching
        return [
            ObjectSpec("circle", "red", 0.08, 0.2, 0.2),
            ObjectSpec("circle", "blue", 0.08, 0.8, 0.2),
            ObjectSpec("circle", "yellow", 0.08, 0.2, 0.8),
            ObjectSpec("square", "red", 0.08, 0.8, 0.8),
        ]

    def test_square_corners(self):
        # several axes work; the sweep reports the first, horizontal
        res = is_symmetric(self.corners())
        assert res.is_symmetric
        assert res.axis_angle == 0.0
        assert res.max_error < 1e-12

    def test_attribute_mismatch_breaks_it(self):
        res = is_symmetric(self.mixed_corners())
        assert not res.is_symmetric
        assert res.max_error > 0.5

    def test_matching_attributes_restore_it(self):
        objs = self.mixed_corners()
        objs[2] = ObjectSpec("circle", "blue", 0.08, 0.2, 0.8)
        res = is_symmetric(objs)
        assert res.is_symmetric
        # reds sit on the main diagonal, blues swap across it
        assert res.axis_angle == pytest.approx(math.pi / 4)

    def test_perturbation_beyond_tolerance(self):
        objs = self.corners()
        objs[0] = ObjectSpec("circle", "red", 0.08, 0.35, 0.2)
        assert not is_symmetric(objs).is_symmetric

    def test_object_on_the_axis_pairs_with_itself(self):
        objs = self.corners() + [o(x=0.5, y=0.5)]
        res = is_symmetric(objs)
        assert res.is_symmetric
        assert res.max_error < 1e-12

    def test_two_identical_objects(self):
        # the axis through both centers pairs each with itself
        res = is_symmetric([o(x=0.3), o(x=0.7)])
        assert res.is_symmetric

    def test_tighter_tolerance_rejects(self):
        objs = self.corners()
        objs[0] = ObjectSpec("circle", "red", 0.08, 0.21, 0.2)
        assert is_symmetric(objs).is_symmetric
        assert not is_symmetric(objs, GestaltConfig(symmetry_match_tol=1e-4)).is_symmetric

    def test_needs_two(self):
        with pytest.raises(ValueError):
            is_symmetric([o()])


class TestClusters:
    def three_pairs(self):
        return [
            o(x=0.15, y=0.15), o(x=0.25, y=0.15),
            o(x=0.75, y=0.15), o(x=0.85, y=0.15),
            o(x=0.45, y=0.85), o(x=0.55, y=0.85),
        ]

    def test_three_clusters(self):
        objs = self.three_pairs()
        parts = cluster_by_proximity(objs)
        assert len(parts) == 3
        assert sorted(sum(parts, [])) == list(range(6))

    def test_matches_union_find(self):
        objs = self.three_pairs()
        cfg = GestaltConfig()
        eps = cfg.cluster_eps_factor * float(np.mean([ob.size for ob in objs]))
        assert cluster_by_proximity(objs, cfg) == union_find_clusters(objs, eps)

    def test_random_layouts_match_union_find(self):
        rng = np.random.default_rng(99)
        cfg = GestaltConfig()
        for _ in range(40):
            n = int(rng.integers(1, 12))
            objs = [
                o(size=0.06, x=float(rng.uniform(0.1, 0.9)), y=float(rng.uniform(0.1, 0.9)))
                for _ in range(n)
            ]
            eps = cfg.cluster_eps_factor * float(np.mean([ob.size for ob in objs]))
            assert cluster_by_proximity(objs, cfg) == union_find_clusters(objs, eps)

    def test_single_object(self):
        assert cluster_by_proximity([o()]) == [[0]]

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            cluster_by_proximity([])

    def test_eps_factor_changes_partition(self):
        objs = [o(x=0.2), o(x=0.4), o(x=0.8)]
        tight = cluster_by_proximity(objs, GestaltConfig(cluster_eps_factor=0.5))
        loose = cluster_by_proximity(objs, GestaltConfig(cluster_eps_factor=8.0))
        assert len(tight) == 3
        assert len(loose) == 1


class TestFlower:
    def flower(self, petals=6, petal_color="yellow"):
        objs = [ObjectSpec("circle", "red", 0.1, 0.5, 0.5)]
        for k in range(petals):
            t = 2.0 * math.pi * k / petals
            objs.append(
                ObjectSpec(
                    "circle", petal_color, 0.08,
                    0.5 + 0.2 * math.cos(t), 0.5 + 0.2 * math.sin(t),
                )
            )
        return objs

    def test_flower(self):
        assert is_flower(self.flower())

    def test_mixed_petals_rejected(self):
        objs = self.flower()
        objs[1] = ObjectSpec("circle", "blue", 0.08, objs[1].x, objs[1].y)
        assert not is_flower(objs)

    def test_core_must_sit_at_the_center(self):
        objs = self.flower()
        objs[0] = ObjectSpec("circle", "red", 0.1, 0.15, 0.15)
        assert not is_flower(objs)

    def test_too_few_objects(self):
        assert not is_flower(self.flower(petals=2))

    def test_scattered_objects(self):
        rng = np.random.default_rng(5)
        objs = [
            o(x=float(rng.uniform(0.1, 0.9)), y=float(rng.uniform(0.1, 0.9)))
            for _ in range(7)
        ]
        assert not is_flower(objs)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(circular_residual_tol=0.0),
            dict(circular_residual_tol=-1.0),
            dict(symmetry_match_tol=0.0),
            dict(symmetry_axis_steps=3),
            dict(cluster_eps_factor=0.0),
        ],
    )
    def test_rejects_bad_tolerances(self, kwargs):
        with pytest.raises(ConfigError):
            GestaltConfig(**kwargs)
