"""Sampling: deterministic streams, positive/negative generation,
atomic edits, and near-miss search."""
from __future__ import annotations

import numpy as np
import pytest

from figpat import (
    EditOp,
    Figure,
    ObjectSpec,
    Pattern,
    UniverseConfig,
    apply_edit,
    apply_edits,
    evaluate,
    generate_near_misses,
    generate_negatives,
    generate_positives,
    parse_statement,
    validate_figure,
)
from figpat.errors import ConfigError, GeneratorUnsound, NoNearMissFound, YieldTooLow
from figpat.sampler import child_rng, register_positive_generator, sample_figure


def pattern_for(text: str, universe: UniverseConfig, **kwargs) -> Pattern:
    return Pattern(parse_statement(text, universe), universe, **kwargs)


@pytest.fixture(scope="module")
def u5() -> UniverseConfig:
    return UniverseConfig(n_min=1, n_max=5)


@pytest.fixture(scope="module")
def red_pattern(u5) -> Pattern:
    return pattern_for("COUNT(objects WHERE color = red) >= 1", u5)


class TestStreams:
    def test_child_rng_deterministic(self):
        a = child_rng(7, 1, 3).integers(0, 1 << 30, size=4)
        b = child_rng(7, 1, 3).integers(0, 1 << 30, size=4)
        assert np.array_equal(a, b)

    def test_streams_are_separated(self):
        draws = {
            (kind, idx): tuple(child_rng(7, kind, idx).integers(0, 1 << 30, size=4))
            for kind in (0, 1, 2, 3)
            for idx in (0, 1)
        }
        assert len(set(draws.values())) == len(draws)

    def test_seed_matters(self):
        a = child_rng(1, 0, 0).integers(0, 1 << 30, size=4)
        b = child_rng(2, 0, 0).integers(0, 1 << 30, size=4)
        assert not np.array_equal(a, b)


class TestSampleFigure:
    def test_figures_validate(self, u5):
        for i in range(200):
            fig = sample_figure(u5, child_rng(11, 0, i))
            assert validate_figure(fig, u5).ok

    def test_requested_count(self, u5):
        fig = sample_figure(u5, child_rng(11, 0, 0), n=4)
        assert len(fig) == 4

    def test_deterministic(self, u5):
        a = sample_figure(u5, child_rng(11, 0, 5))
        b = sample_figure(u5, child_rng(11, 0, 5))
        assert a == b


class TestPositives:
    def test_all_satisfy(self, red_pattern, u5):
        figs, report = generate_positives(red_pattern, 40, 3)
        assert len(figs) == 40
        assert report.produced == 40
        assert 0.0 <= report.rejection_rate < 1.0
        for f in figs:
            assert evaluate(red_pattern.statement, f, universe=u5)
            assert validate_figure(f, u5).ok

    def test_deterministic(self, red_pattern):
        a, _ = generate_positives(red_pattern, 10, 3)
        b, _ = generate_positives(red_pattern, 10, 3)
        assert a == b

    def test_prefix_stable(self, red_pattern):
        short, _ = generate_positives(red_pattern, 5, 3)
        long, _ = generate_positives(red_pattern, 12, 3)
        assert long[:5] == short

    def test_parallel_equals_serial(self, red_pattern):
        serial, _ = generate_positives(red_pattern, 16, 3)
        parallel, _ = generate_positives(red_pattern, 16, 3, workers=4)
        assert serial == parallel

    def test_unsatisfiable_raises(self, u5):
        p = pattern_for("COUNT(objects) = 999", u5)
        with pytest.raises(YieldTooLow):
            generate_positives(p, 1, 0, yield_floor=0.05)

    def test_bad_yield_floor(self, red_pattern):
        with pytest.raises(ConfigError):
            generate_positives(red_pattern, 1, 0, yield_floor=1.5)

    def test_unsound_constructive_generator(self, u5):
        def always_blue(pattern, rng):
            return Figure((ObjectSpec("circle", "blue", 0.1, 0.5, 0.5),))

        register_positive_generator("test-always-blue", always_blue)
        p = pattern_for(
            "COUNT(objects WHERE color = red) >= 1", u5,
            positive_generator="test-always-blue",
        )
        with pytest.raises(GeneratorUnsound):
            generate_positives(p, 1, 0)

    def test_unknown_generator_name(self, u5):
        p = pattern_for("COUNT(objects) >= 1", u5, positive_generator="no-such-generator")
        with pytest.raises(ConfigError):
            generate_positives(p, 1, 0)


class TestNegatives:
    def test_all_fail(self, red_pattern, u5):
        pos, _ = generate_positives(red_pattern, 30, 3)
        negs = generate_negatives(red_pattern, 30, 3, positives=pos)
        assert len(negs) == 30
        for f in negs:
            assert not evaluate(red_pattern.statement, f, universe=u5)
            assert validate_figure(f, u5).ok

    def test_deterministic_and_parallel(self, red_pattern):
        pos, _ = generate_positives(red_pattern, 10, 3)
        a = generate_negatives(red_pattern, 12, 3, positives=pos)
        b = generate_negatives(red_pattern, 12, 3, positives=pos, workers=4)
        assert a == b

    def test_counts_track_positives(self, u5):
        # positives of a count-pinned statement all have 3 objects; the
        # negatives should stay in the neighborhood instead of drifting
        # to the universe-wide count distribution
        p = pattern_for("COUNT(objects) = 3", u5)
        pos, _ = generate_positives(p, 20, 1)
        # the pinned-count stratum can never falsify, so keep its
        # attempt budget small before the search widens
        negs = generate_negatives(p, 40, 1, positives=pos, yield_floor=0.01)
        spread = {len(f.objects) for f in negs}
        assert 3 not in spread
        assert spread <= {2, 4}

    def test_tautology_raises(self, u5):
        p = pattern_for("COUNT(objects) >= 0", u5)
        with pytest.raises(YieldTooLow):
            generate_negatives(p, 1, 0, yield_floor=0.05)


class TestEdits:
    def test_to_dict_omits_unset_fields(self):
        op = EditOp("recolor", 2, color="red")
        assert op.to_dict() == {"kind": "recolor", "index": 2, "color": "red"}

    def test_round_trip_via_kwargs(self):
        op = EditOp("add", None, shape="circle", color="red", size=0.1, x=0.5, y=0.5)
        assert EditOp(**op.to_dict()) == op

    def test_recolor(self, u5):
        fig = Figure((ObjectSpec("circle", "blue", 0.1, 0.5, 0.5),))
        out = apply_edit(fig, EditOp("recolor", 0, color="red"), u5)
        assert out.objects[0].color == "red"

    def test_invalid_result_is_rejected(self, u5):
        fig = Figure((ObjectSpec("circle", "blue", 0.1, 0.5, 0.5),))
        # moving the disc across the edge violates the cropping rule
        assert apply_edit(fig, EditOp("move", 0, x=0.01, y=0.5), u5) is None
        # removing the only object violates the count rule
        assert apply_edit(fig, EditOp("remove", 0), u5) is None

    def test_unknown_kind(self, u5):
        fig = Figure((ObjectSpec("circle", "blue", 0.1, 0.5, 0.5),))
        with pytest.raises(ConfigError):
            apply_edit(fig, EditOp("paint", 0, color="red"), u5)

    def test_apply_edits_composes(self, u5):
        fig = Figure((ObjectSpec("circle", "blue", 0.1, 0.3, 0.3),))
        trail = [
            EditOp("add", None, shape="square", color="red", size=0.1, x=0.7, y=0.7),
            EditOp("recolor", 0, color="yellow"),
        ]
        out = apply_edits(fig, trail, u5)
        assert len(out) == 2
        assert out.objects[0].color == "yellow"
        assert out.objects[1].shape == "square"

    def test_apply_edits_propagates_failure(self, u5):
        fig = Figure((ObjectSpec("circle", "blue", 0.1, 0.3, 0.3),))
        trail = [EditOp("remove", 0), EditOp("recolor", 0, color="red")]
        assert apply_edits(fig, trail, u5) is None


class TestNearMisses:
    def test_flip_and_trail(self, red_pattern, u5):
        pos, _ = generate_positives(red_pattern, 30, 3)
        misses = generate_near_misses(red_pattern, pos, 3, count=10)
        assert len(misses) == 10
        for nm in misses:
            assert len(nm.edits) == 1
            assert evaluate(red_pattern.statement, pos[nm.source_index], universe=u5)
            assert not evaluate(red_pattern.statement, nm.figure, universe=u5)
            assert validate_figure(nm.figure, u5).ok

    def test_provenance_replays(self, red_pattern, u5):
        pos, _ = generate_positives(red_pattern, 20, 3)
        for nm in generate_near_misses(red_pattern, pos, 3, count=8):
            assert apply_edits(pos[nm.source_index], nm.edits, u5) == nm.figure

    def test_deterministic_and_parallel(self, red_pattern):
        pos, _ = generate_positives(red_pattern, 20, 3)
        a = generate_near_misses(red_pattern, pos, 3, count=8)
        b = generate_near_misses(red_pattern, pos, 3, count=8, workers=4)
        assert a == b

    def test_sources_scanned_in_order(self, red_pattern):
        pos, _ = generate_positives(red_pattern, 20, 3)
        misses = generate_near_misses(red_pattern, pos, 3, count=8)
        indices = [nm.source_index for nm in misses]
        assert indices == sorted(indices)

    def test_two_edit_trails(self, u5):
        p = pattern_for(
            "COUNT(objects WHERE color = red) >= 1 AND COUNT(objects WHERE color = blue) >= 1",
            u5,
        )
        pos, _ = generate_positives(p, 20, 5)
        misses = generate_near_misses(p, pos, 5, max_edits=2, count=10)
        assert all(1 <= len(nm.edits) <= 2 for nm in misses)
        assert any(len(nm.edits) == 1 for nm in misses)

    def test_unflippable_statement_raises(self, u5):
        p = pattern_for("COUNT(objects) >= 1", u5)
        pos, _ = generate_positives(p, 6, 1)
        with pytest.raises(NoNearMissFound) as exc:
            generate_near_misses(p, pos, 1, eval_budget=60)
        assert "6" in str(exc.value)

    def test_edit_kinds_are_honored(self, u5):
        p = pattern_for(
            "COUNT(objects WHERE color = red) >= 1", u5, edit_kinds=("recolor",)
        )
        pos, _ = generate_positives(p, 20, 3)
        for nm in generate_near_misses(p, pos, 3, count=8):
            assert all(op.kind == "recolor" for op in nm.edits)
