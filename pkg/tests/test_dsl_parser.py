"""Statement parsing: grammar coverage, error positions, vocabulary
checks, and the guarantee that every statement problem surfaces at
parse time rather than during evaluation."""
from __future__ import annotations

import pytest

from figpat import UniverseConfig, parse_statement
from figpat.dsl import (
    And,
    AttrTest,
    CountCmp,
    GestaltTest,
    Not,
    Or,
    Quantifier,
    SideTest,
    SpatialTest,
    canonical_key,
    free_variables,
)
from figpat.errors import StatementSyntaxError, StatementTypeError


class TestGrammar:
    def test_count_against_int(self):
        s = parse_statement("COUNT(objects WHERE color = red) >= 1")
        assert isinstance(s.root, CountCmp)
        assert s.root.op == ">="
        assert s.root.right == 1

    def test_count_against_count(self):
        s = parse_statement("COUNT(objects WHERE color = red) > COUNT(objects WHERE shape = circle)")
        assert isinstance(s.root, CountCmp)
        assert not isinstance(s.root.right, int)

    @pytest.mark.parametrize("op", ["=", "!=", "<", "<=", ">", ">="])
    def test_all_count_ops(self, op):
        s = parse_statement(f"COUNT(objects) {op} 3")
        assert s.root.op == op

    def test_quantifier(self):
        s = parse_statement("EXISTS a, b DISTINCT IN objects : SAME_SHAPE(a, b)")
        q = s.root
        assert isinstance(q, Quantifier)
        assert q.kind == "exists"
        assert q.variables == ("a", "b")
        assert q.distinct

    def test_forall(self):
        s = parse_statement("FORALL a IN objects WHERE shape = circle : a.color = red")
        assert s.root.kind == "forall"
        assert not s.root.distinct

    def test_single_variable_distinct(self):
        s = parse_statement("EXISTS a DISTINCT IN objects : a.color = red")
        assert s.root.distinct

    def test_gestalt_atoms(self):
        s = parse_statement("CIRCULAR(objects) AND SYMMETRIC(objects) AND CLUSTERED(objects, 2)")
        kinds = [c.concept for c in s.root.children]
        assert kinds == ["circular", "symmetric", "clustered"]
        assert s.root.children[2].k == 2

    def test_side_predicate(self):
        s = parse_statement("EXISTS a IN objects : LEFT_SIDE(a)")
        assert isinstance(s.root.body, SideTest)
        assert s.root.body.side == "left"

    def test_selector_with_two_clauses(self):
        s = parse_statement("COUNT(objects WHERE color = red AND shape = triangle) = 4")
        where = s.root.left.selector.where
        assert isinstance(where, And)
        assert all(isinstance(c, AttrTest) for c in where.children)

    def test_or_in_selector(self):
        s = parse_statement("COUNT(objects WHERE color = red OR color = blue) = 2")
        assert isinstance(s.root.left.selector.where, Or)

    def test_not_in_body(self):
        s = parse_statement("FORALL a, b IN objects : NOT SAME_COLOR(a, b)")
        assert isinstance(s.root.body, Not)

    def test_double_negation(self):
        s = parse_statement("NOT NOT COUNT(objects) = 1")
        assert isinstance(s.root, Not)
        assert isinstance(s.root.child, Not)

    def test_keywords_case_insensitive(self):
        s = parse_statement("forall a in OBJECTS : a.SHAPE != Circle")
        assert isinstance(s.root, Quantifier)
        assert s.root.body.value == "circle"

    def test_between_needs_three_vars(self):
        s = parse_statement("EXISTS a, b, c DISTINCT IN objects : BETWEEN(a, b, c)")
        assert isinstance(s.root.body, SpatialTest)
        assert s.root.body.relation == "between"

    def test_or_binds_looser_than_and(self):
        s = parse_statement(
            "COUNT(objects) = 1 OR COUNT(objects) = 2 AND COUNT(objects WHERE color = red) = 1"
        )
        assert isinstance(s.root, Or)
        assert isinstance(s.root.children[1], And)

    def test_body_backtracks_at_count(self):
        # the body grabs conjuncts greedily, then rewinds so the count
        # comparison lands outside the quantifier
        s = parse_statement("EXISTS a IN objects : a.color = red AND COUNT(objects) = 2")
        assert isinstance(s.root, And)
        assert isinstance(s.root.children[0], Quantifier)
        assert isinstance(s.root.children[1], CountCmp)

    def test_source_is_kept(self):
        text = "COUNT(objects) = 3"
        assert parse_statement(text).source == text


class TestErrors:
    def test_empty(self):
        with pytest.raises(StatementSyntaxError) as exc:
            parse_statement("")
        assert exc.value.line == 1
        assert exc.value.col == 1

    def test_truncated_comparison(self):
        with pytest.raises(StatementSyntaxError) as exc:
            parse_statement("COUNT(objects WHERE color = red) >= ")
        assert "end of input" in str(exc.value)

    def test_double_equals_is_not_an_operator(self):
        with pytest.raises(StatementSyntaxError):
            parse_statement("COUNT(objects) == 1")

    def test_unknown_color(self):
        with pytest.raises(StatementTypeError) as exc:
            parse_statement("COUNT(objects WHERE color = green) >= 1")
        assert "green" in str(exc.value)
        assert exc.value.col == 29

    def test_error_position_spans_lines(self):
        with pytest.raises(StatementTypeError) as exc:
            parse_statement("COUNT(objects\nWHERE color =\ngreen) >= 1")
        assert exc.value.line == 3
        assert exc.value.col == 1

    def test_vocabulary_follows_universe(self):
        u = UniverseConfig(allowed_colors=("green", "red"))
        s = parse_statement("COUNT(objects WHERE color = green) >= 1", u)
        assert s.root.left.selector.where.value == "green"
        with pytest.raises(StatementTypeError):
            parse_statement("COUNT(objects WHERE color = blue) >= 1", u)

    def test_unknown_size_word(self):
        with pytest.raises(StatementTypeError) as exc:
            parse_statement("EXISTS a IN objects : a.size = tiny")
        assert "size word" in str(exc.value)

    def test_undeclared_variable(self):
        with pytest.raises(StatementTypeError) as exc:
            parse_statement("EXISTS a IN objects : SAME_COLOR(a, b)")
        assert "undeclared" in str(exc.value)

    def test_between_arity(self):
        with pytest.raises(StatementTypeError) as exc:
            parse_statement("EXISTS a, b IN objects : BETWEEN(a, b)")
        assert "3" in str(exc.value)

    def test_spatial_at_top_level_rejected(self):
        with pytest.raises(StatementSyntaxError):
            parse_statement("BETWEEN(a, b, c)")

    def test_missing_colon(self):
        with pytest.raises(StatementSyntaxError) as exc:
            parse_statement("EXISTS a IN objects a.color = red")
        assert exc.value.col == 21

    def test_clustered_needs_count(self):
        with pytest.raises(StatementSyntaxError):
            parse_statement("CLUSTERED(objects)")

    def test_ordering_op_rejected_on_attributes(self):
        with pytest.raises(StatementTypeError):
            parse_statement("COUNT(objects WHERE size < big) = 1")

    def test_reserved_word_cannot_be_variable(self):
        with pytest.raises((StatementSyntaxError, StatementTypeError)):
            parse_statement("EXISTS count IN objects : count.color = red")

    def test_unbalanced_paren(self):
        with pytest.raises(StatementSyntaxError):
            parse_statement("(COUNT(objects) = 1")

    def test_trailing_garbage(self):
        with pytest.raises(StatementSyntaxError):
            parse_statement("COUNT(objects) = 1 xyzzy")


class TestCanonicalKeys:
    def test_conjunction_commutes(self):
        a = parse_statement("COUNT(objects WHERE color = red) = 1 AND COUNT(objects WHERE color = blue) = 2")
        b = parse_statement("COUNT(objects WHERE color = blue) = 2 AND COUNT(objects WHERE color = red) = 1")
        assert canonical_key(a.root) == canonical_key(b.root)

    def test_variable_names_do_not_matter(self):
        p = parse_statement("EXISTS a, b DISTINCT IN objects : SAME_COLOR(a, b)")
        q = parse_statement("EXISTS p, q DISTINCT IN objects : SAME_COLOR(p, q)")
        assert canonical_key(p.root) == canonical_key(q.root)

    def test_operator_matters(self):
        p = parse_statement("COUNT(objects) = 1")
        q = parse_statement("COUNT(objects) >= 1")
        assert canonical_key(p.root) != canonical_key(q.root)

    def test_comparand_matters(self):
        p = parse_statement("COUNT(objects) >= 1")
        q = parse_statement("COUNT(objects) >= 2")
        assert canonical_key(p.root) != canonical_key(q.root)


class TestFreeVariables:
    def test_clean_statement(self):
        s = parse_statement("EXISTS a, b DISTINCT IN objects : SAME_SHAPE(a, b)")
        report = free_variables(s)
        assert not report.undeclared
        assert not report.unused

    def test_unused_variable_reported(self):
        s = parse_statement("EXISTS a, b IN objects : a.color = red")
        assert "b" in free_variables(s).unused
