"""Statement language: parser, evaluator, and deterministic English rendering.

A statement is a pure boolean claim about one figure. Grammar (keywords
are case-insensitive, whitespace is free):

    stmt      := disj
    disj      := conj ("OR" conj)*
    conj      := unary ("AND" unary)*
    unary     := "NOT" unary | "(" stmt ")" | atom
    atom      := countCmp | quant | gestalt
    countCmp  := count cmpOp (count | INTEGER)
    count     := "COUNT" "(" selector ")"
    cmpOp     := "=" | "!=" | "<" | "<=" | ">" | ">="
    selector  := "OBJECTS" ["WHERE" attrExpr]
    attrExpr  := boolean combination of  attr ("="|"!=") value
    quant     := ("EXISTS"|"FORALL") var ("," var)* ["DISTINCT"]
                 "IN" selector ":" objPred
    objPred   := boolean combination of  var "." attr ("="|"!=") value
                 | spatial "(" var ("," var)* ")"
                 | side "(" var ")"
    spatial   := LEFT_OF | RIGHT_OF | ABOVE | BELOW | BETWEEN | TOUCHES
                 | SAME_SHAPE | SAME_COLOR | SMALLER | BIGGER
    side      := LEFT_SIDE | RIGHT_SIDE | UPPER_SIDE | LOWER_SIDE
    gestalt   := "CIRCULAR" "(" selector ")" | "SYMMETRIC" "(" selector ")"
                 | "CLUSTERED" "(" selector "," INTEGER ")"

Attributes are shape, color, and size; size values are the words
"small" and "big", resolved against the universe threshold. A
quantifier body extends as far right as possible: in
``EXISTS o IN objects: o.color = red AND COUNT(objects) = 2`` the AND
would be claimed by the body first, fail there, and then bind at
statement level; parenthesize the quantifier when in doubt.

All errors surface at parse time: syntax errors carry line and column,
type errors cover bad vocabulary, counts compared to non-counts, wrong
predicate arity, and undeclared or duplicate variables. Evaluation is
total and pure.

Spatial semantics use centers only, y growing downward: LEFT_OF means
strictly smaller x, ABOVE strictly smaller y, BETWEEN means the first
center lies in the axis-aligned bounding box of the other two, TOUCHES
means the center distance matches the sum of radii within 0.01, and
ties make every strict relation false. LEFT_SIDE/RIGHT_SIDE mean
x < 0.5 / x > 0.5, UPPER_SIDE/LOWER_SIDE the same for y.
"""
from __future__ import annotations

import itertools
import operator
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping, NamedTuple, Union

from .errors import (
    ParseFailure,
    StatementSyntaxError,
    StatementTypeError,
)
from .gestalt import GestaltConfig, cluster_by_proximity, is_circular_arrangement, is_symmetric
from .model import (
    DEFAULT_COLORS,
    DEFAULT_SHAPES,
    DEFAULT_UNIVERSE,
    Figure,
    ObjectSpec,
    SIZE_WORDS,
    UniverseConfig,
)

# --------------------------------------------------------------------------
# vocabulary

_IMPLICIT = "_"  # the hidden variable a selector's WHERE clause tests

_SPATIAL_ARITY = {
    "LEFT_OF": 2,
    "RIGHT_OF": 2,
    "ABOVE": 2,
    "BELOW": 2,
    "BETWEEN": 3,
    "TOUCHES": 2,
    "SAME_SHAPE": 2,
    "SAME_COLOR": 2,
    "SMALLER": 2,
    "BIGGER": 2,
}
_SIDES = {"LEFT_SIDE", "RIGHT_SIDE", "UPPER_SIDE", "LOWER_SIDE"}
_GESTALT = {"CIRCULAR", "SYMMETRIC", "CLUSTERED"}
_ATTRS = {"SHAPE", "COLOR", "SIZE"}
_CORE = {"AND", "OR", "NOT", "COUNT", "EXISTS", "FORALL", "DISTINCT", "IN", "WHERE", "OBJECTS"}
_RESERVED = _CORE | _ATTRS | _SIDES | _GESTALT | set(_SPATIAL_ARITY)

TOUCH_TOLERANCE = 0.01


@dataclass(frozen=True)
class Vocabulary:
    """Closed word sets a parser validates attribute values against."""

    shapes: frozenset[str]
    colors: frozenset[str]

    @classmethod
    def from_universe(cls, u: UniverseConfig) -> "Vocabulary":
        return cls(shapes=frozenset(u.allowed_shapes), colors=frozenset(u.allowed_colors))


DEFAULT_VOCABULARY = Vocabulary(shapes=frozenset(DEFAULT_SHAPES), colors=frozenset(DEFAULT_COLORS))


# --------------------------------------------------------------------------
# AST


class Node:
    """Base class for all statement AST nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class And(Node):
    children: tuple[Node, ...]


@dataclass(frozen=True)
class Or(Node):
    children: tuple[Node, ...]


@dataclass(frozen=True)
class Not(Node):
    child: Node


@dataclass(frozen=True)
class AttrTest(Node):
    """`var.attr = value` (or !=); selector WHERE clauses use the
    implicit variable."""

    var: str
    attr: str  # shape | color | size
    op: str  # = | !=
    value: str


@dataclass(frozen=True)
class SpatialTest(Node):
    relation: str  # lowercase, e.g. "left_of"
    args: tuple[str, ...]


@dataclass(frozen=True)
class SideTest(Node):
    var: str
    side: str  # left | right | upper | lower


@dataclass(frozen=True)
class Selector:
    """`objects` optionally filtered by a WHERE predicate."""

    where: Node | None = None


@dataclass(frozen=True)
class CountExpr(Node):
    selector: Selector


@dataclass(frozen=True)
class CountCmp(Node):
    left: CountExpr
    op: str  # = != < <= > >=
    right: Union[CountExpr, int]


@dataclass(frozen=True)
class Quantifier(Node):
    kind: str  # exists | forall
    variables: tuple[str, ...]
    distinct: bool
    selector: Selector
    body: Node


@dataclass(frozen=True)
class GestaltTest(Node):
    concept: str  # circular | symmetric | clustered
    selector: Selector
    k: int | None = None


@dataclass(frozen=True)
class Statement:
    """A parsed statement plus the text it came from."""

    root: Node
    source: str


# --------------------------------------------------------------------------
# lexer


class _Token(NamedTuple):
    kind: str
    text: str
    norm: str  # uppercase of text for keyword matching
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op><=|>=|!=|=|<|>)
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<comma>,)
      | (?P<colon>:)
      | (?P<dot>\.)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StatementSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup or ""
        token_text = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, token_text, token_text.upper(), line, pos - line_start + 1))
        newlines = token_text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + token_text.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", "", line, pos - line_start + 1))
    return tokens


# --------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[_Token], vocab: Vocabulary):
        self.tokens = tokens
        self.pos = 0
        self.vocab = vocab

    # -- token plumbing

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _at_keyword(self, *names: str) -> bool:
        tok = self._peek()
        return tok.kind == "ident" and tok.norm in names

    def _expect_keyword(self, name: str) -> _Token:
        tok = self._peek()
        if tok.kind == "ident" and tok.norm == name:
            return self._advance()
        raise StatementSyntaxError(f"expected {name}, found {tok.text or 'end of input'}", tok.line, tok.col)

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._peek()
        if tok.kind == kind:
            return self._advance()
        raise StatementSyntaxError(f"expected {what}, found {tok.text or 'end of input'}", tok.line, tok.col)

    # -- statement level

    def parse(self) -> Node:
        node = self._disj()
        tok = self._peek()
        if tok.kind != "eof":
            raise StatementSyntaxError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
        return node

    def _disj(self) -> Node:
        parts = [self._conj()]
        while self._at_keyword("OR"):
            self._advance()
            parts.append(self._conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _conj(self) -> Node:
        parts = [self._unary()]
        while self._at_keyword("AND"):
            self._advance()
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self) -> Node:
        if self._at_keyword("NOT"):
            self._advance()
            return Not(self._unary())
        if self._peek().kind == "lparen":
            self._advance()
            node = self._disj()
            self._expect("rparen", "')'")
            return node
        return self._atom()

    def _atom(self) -> Node:
        tok = self._peek()
        if tok.kind != "ident":
            raise StatementSyntaxError(
                f"expected a predicate, found {tok.text or 'end of input'}", tok.line, tok.col
            )
        if tok.norm == "COUNT":
            return self._count_cmp()
        if tok.norm in ("EXISTS", "FORALL"):
            return self._quantifier()
        if tok.norm in _GESTALT:
            return self._gestalt()
        raise StatementSyntaxError(
            f"expected COUNT, EXISTS, FORALL, or a gestalt predicate, found {tok.text!r}",
            tok.line,
            tok.col,
        )

    # -- counts

    def _count_cmp(self) -> Node:
        left = self._count()
        op_tok = self._expect("op", "a comparison operator")
        tok = self._peek()
        right: Union[CountExpr, int]
        if tok.kind == "int":
            self._advance()
            right = int(tok.text)
        elif tok.kind == "ident" and tok.norm == "COUNT":
            right = self._count()
        elif tok.kind == "ident":
            raise StatementTypeError(
                f"a count can only be compared to a count or an integer, not {tok.text!r}",
                tok.line,
                tok.col,
            )
        else:
            raise StatementSyntaxError(
                f"expected COUNT or an integer, found {tok.text or 'end of input'}",
                tok.line,
                tok.col,
            )
        return CountCmp(left=left, op=op_tok.text, right=right)

    def _count(self) -> CountExpr:
        self._expect_keyword("COUNT")
        self._expect("lparen", "'('")
        sel = self._selector()
        self._expect("rparen", "')'")
        return CountExpr(sel)

    # -- selectors

    def _selector(self) -> Selector:
        self._expect_keyword("OBJECTS")
        if self._at_keyword("WHERE"):
            self._advance()
            return Selector(where=self._attr_disj())
        return Selector(where=None)

    def _attr_disj(self) -> Node:
        parts = [self._attr_conj()]
        while self._at_keyword("OR"):
            self._advance()
            parts.append(self._attr_conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _attr_conj(self) -> Node:
        parts = [self._attr_unary()]
        while self._at_keyword("AND"):
            self._advance()
            parts.append(self._attr_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _attr_unary(self) -> Node:
        if self._at_keyword("NOT"):
            self._advance()
            return Not(self._attr_unary())
        if self._peek().kind == "lparen":
            self._advance()
            node = self._attr_disj()
            self._expect("rparen", "')'")
            return node
        return self._attr_test()

    def _attr_test(self) -> Node:
        tok = self._peek()
        if tok.kind != "ident" or tok.norm not in _ATTRS:
            raise StatementSyntaxError(
                f"expected an attribute (shape, color, size), found {tok.text or 'end of input'}",
                tok.line,
                tok.col,
            )
        self._advance()
        attr = tok.norm.lower()
        op_tok = self._expect("op", "'=' or '!='")
        if op_tok.text not in ("=", "!="):
            raise StatementTypeError(
                f"attribute tests support only = and !=, not {op_tok.text!r}",
                op_tok.line,
                op_tok.col,
            )
        value = self._attr_value(attr)
        return AttrTest(var=_IMPLICIT, attr=attr, op=op_tok.text, value=value)

    def _attr_value(self, attr: str) -> str:
        tok = self._peek()
        if tok.kind != "ident":
            raise StatementSyntaxError(
                f"expected a {attr} value, found {tok.text or 'end of input'}", tok.line, tok.col
            )
        self._advance()
        value = tok.text.lower()
        if attr == "shape" and value not in self.vocab.shapes:
            raise StatementTypeError(
                f"unknown shape {value!r}; allowed: {sorted(self.vocab.shapes)}", tok.line, tok.col
            )
        if attr == "color" and value not in self.vocab.colors:
            raise StatementTypeError(
                f"unknown color {value!r}; allowed: {sorted(self.vocab.colors)}", tok.line, tok.col
            )
        if attr == "size" and value not in SIZE_WORDS:
            raise StatementTypeError(
                f"unknown size word {value!r}; allowed: {list(SIZE_WORDS)}", tok.line, tok.col
            )
        return value

    # -- quantifiers

    def _quantifier(self) -> Node:
        kind_tok = self._advance()
        kind = kind_tok.norm.lower()
        variables = [self._variable_decl(())]
        while self._peek().kind == "comma":
            self._advance()
            variables.append(self._variable_decl(tuple(variables)))
        distinct = False
        if self._at_keyword("DISTINCT"):
            self._advance()
            distinct = True
        self._expect_keyword("IN")
        sel = self._selector()
        self._expect("colon", "':'")
        body = self._obj_disj(frozenset(variables))
        return Quantifier(
            kind=kind, variables=tuple(variables), distinct=distinct, selector=sel, body=body
        )

    def _variable_decl(self, seen: tuple[str, ...]) -> str:
        tok = self._peek()
        if tok.kind != "ident":
            raise StatementSyntaxError(
                f"expected a variable name, found {tok.text or 'end of input'}", tok.line, tok.col
            )
        if tok.norm in _RESERVED:
            raise StatementTypeError(
                f"{tok.text!r} is a reserved word and cannot name a variable", tok.line, tok.col
            )
        if tok.text in seen:
            raise StatementTypeError(f"duplicate variable {tok.text!r}", tok.line, tok.col)
        self._advance()
        return tok.text

    # -- quantifier bodies; AND/OR chains backtrack so a trailing
    #    statement-level predicate is handed back to the outer parse

    def _obj_disj(self, declared: frozenset[str]) -> Node:
        parts = [self._obj_conj(declared)]
        while self._at_keyword("OR"):
            mark = self.pos
            self._advance()
            try:
                parts.append(self._obj_conj(declared))
            except StatementSyntaxError:
                self.pos = mark
                break
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _obj_conj(self, declared: frozenset[str]) -> Node:
        parts = [self._obj_unary(declared)]
        while self._at_keyword("AND"):
            mark = self.pos
            self._advance()
            try:
                parts.append(self._obj_unary(declared))
            except StatementSyntaxError:
                self.pos = mark
                break
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _obj_unary(self, declared: frozenset[str]) -> Node:
        if self._at_keyword("NOT"):
            self._advance()
            return Not(self._obj_unary(declared))
        if self._peek().kind == "lparen":
            self._advance()
            node = self._obj_disj(declared)
            self._expect("rparen", "')'")
            return node
        return self._obj_atom(declared)

    def _obj_atom(self, declared: frozenset[str]) -> Node:
        tok = self._peek()
        if tok.kind != "ident":
            raise StatementSyntaxError(
                f"expected a predicate over declared variables, found {tok.text or 'end of input'}",
                tok.line,
                tok.col,
            )
        if tok.norm in _SPATIAL_ARITY:
            return self._spatial_call(declared)
        if tok.norm in _SIDES:
            return self._side_call(declared)
        # variable attribute test: var.attr op value
        self._advance()
        if tok.norm in _RESERVED:
            raise StatementSyntaxError(
                f"expected a predicate over declared variables, found {tok.text!r}",
                tok.line,
                tok.col,
            )
        if tok.text not in declared:
            raise StatementTypeError(f"undeclared variable {tok.text!r}", tok.line, tok.col)
        self._expect("dot", "'.'")
        attr_tok = self._peek()
        if attr_tok.kind != "ident" or attr_tok.norm not in _ATTRS:
            raise StatementSyntaxError(
                f"expected an attribute (shape, color, size), found {attr_tok.text or 'end of input'}",
                attr_tok.line,
                attr_tok.col,
            )
        self._advance()
        attr = attr_tok.norm.lower()
        op_tok = self._expect("op", "'=' or '!='")
        if op_tok.text not in ("=", "!="):
            raise StatementTypeError(
                f"attribute tests support only = and !=, not {op_tok.text!r}",
                op_tok.line,
                op_tok.col,
            )
        value = self._attr_value(attr)
        return AttrTest(var=tok.text, attr=attr, op=op_tok.text, value=value)

    def _spatial_call(self, declared: frozenset[str]) -> Node:
        name_tok = self._advance()
        relation = name_tok.norm.lower()
        arity = _SPATIAL_ARITY[name_tok.norm]
        self._expect("lparen", "'('")
        args = [self._variable_ref(declared)]
        while self._peek().kind == "comma":
            self._advance()
            args.append(self._variable_ref(declared))
        close = self._expect("rparen", "')'")
        if len(args) != arity:
            raise StatementTypeError(
                f"{name_tok.norm} takes {arity} variables, got {len(args)}", close.line, close.col
            )
        return SpatialTest(relation=relation, args=tuple(args))

    def _side_call(self, declared: frozenset[str]) -> Node:
        name_tok = self._advance()
        side = name_tok.norm.split("_")[0].lower()  # left/right/upper/lower
        self._expect("lparen", "'('")
        var = self._variable_ref(declared)
        self._expect("rparen", "')'")
        return SideTest(var=var, side=side)

    def _variable_ref(self, declared: frozenset[str]) -> str:
        tok = self._peek()
        if tok.kind != "ident" or tok.norm in _RESERVED:
            raise StatementSyntaxError(
                f"expected a variable name, found {tok.text or 'end of input'}", tok.line, tok.col
            )
        if tok.text not in declared:
            raise StatementTypeError(f"undeclared variable {tok.text!r}", tok.line, tok.col)
        self._advance()
        return tok.text

    def _gestalt(self) -> Node:
        name_tok = self._advance()
        concept = name_tok.norm.lower()
        self._expect("lparen", "'('")
        sel = self._selector()
        k: int | None = None
        if concept == "clustered":
            self._expect("comma", "','")
            k_tok = self._expect("int", "a cluster count")
            k = int(k_tok.text)
        self._expect("rparen", "')'")
        return GestaltTest(concept=concept, selector=sel, k=k)


def parse_statement(text: str, universe: UniverseConfig | None = None) -> Statement:
    """Parse statement text against a universe's vocabulary (default
    vocabulary when none is given). All statement errors raise here."""
    if not text or not text.strip():
        raise StatementSyntaxError("empty statement", 1, 1)
    vocab = Vocabulary.from_universe(universe) if universe else DEFAULT_VOCABULARY
    root = _Parser(_tokenize(text), vocab).parse()
    return Statement(root=root, source=text)


# --------------------------------------------------------------------------
# evaluation

_CMP = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class _Context:
    objects: tuple[ObjectSpec, ...]
    small_big_threshold: float
    gestalt: GestaltConfig


def _size_word(size: float, threshold: float) -> str:
    return "small" if size < threshold else "big"


# A statement is compiled into nested closures over a mutable variable
# environment before it runs. Quantifier bodies execute once per
# binding, so resolving node dispatch ahead of the binding loop is what
# keeps large DISTINCT quantifiers affordable. WHERE clauses only ever
# see the implicit variable, which makes every selection a pure
# function of the figure; selections are therefore computed once per
# evaluation and shared by reference.

_Env = dict[str, int]
_Compiled = Callable[[_Env], bool]


class _Evaluator:
    def __init__(self, ctx: _Context):
        self.ctx = ctx
        self._selections: dict[int, list[int]] = {}

    def select(self, sel: Selector) -> list[int]:
        cached = self._selections.get(id(sel))
        if cached is not None:
            return cached
        if sel.where is None:
            out = list(range(len(self.ctx.objects)))
        else:
            test = self.compile(sel.where)
            env: _Env = {}
            out = []
            for i in range(len(self.ctx.objects)):
                env[_IMPLICIT] = i
                if test(env):
                    out.append(i)
        self._selections[id(sel)] = out
        return out

    def compile(self, node: Node) -> _Compiled:
        objects = self.ctx.objects
        if isinstance(node, And):
            kids = tuple(self.compile(c) for c in node.children)

            def f_and(env: _Env) -> bool:
                for k in kids:
                    if not k(env):
                        return False
                return True

            return f_and
        if isinstance(node, Or):
            kids = tuple(self.compile(c) for c in node.children)

            def f_or(env: _Env) -> bool:
                for k in kids:
                    if k(env):
                        return True
                return False

            return f_or
        if isinstance(node, Not):
            child = self.compile(node.child)
            return lambda env: not child(env)
        if isinstance(node, AttrTest):
            return self._compile_attr(node)
        if isinstance(node, SideTest):
            var = node.var
            if node.side == "left":
                return lambda env: objects[env[var]].x < 0.5
            if node.side == "right":
                return lambda env: objects[env[var]].x > 0.5
            if node.side == "upper":
                return lambda env: objects[env[var]].y < 0.5
            return lambda env: objects[env[var]].y > 0.5
        if isinstance(node, SpatialTest):
            return self._compile_spatial(node)
        if isinstance(node, CountCmp):
            op = _CMP[node.op]
            lsel = node.left.selector
            if isinstance(node.right, int):
                rv = node.right
                return lambda env: op(len(self.select(lsel)), rv)
            rsel = node.right.selector
            return lambda env: op(len(self.select(lsel)), len(self.select(rsel)))
        if isinstance(node, Quantifier):
            return self._compile_quantifier(node)
        if isinstance(node, GestaltTest):
            return self._compile_gestalt(node)
        raise TypeError(f"cannot evaluate node {node!r}")

    def _compile_attr(self, node: AttrTest) -> _Compiled:
        objects = self.ctx.objects
        var, value = node.var, node.value
        negate = node.op != "="
        if node.attr == "shape":
            def f(env: _Env) -> bool:
                return (objects[env[var]].shape == value) != negate
        elif node.attr == "color":
            def f(env: _Env) -> bool:
                return (objects[env[var]].color == value) != negate
        else:
            threshold = self.ctx.small_big_threshold
            def f(env: _Env) -> bool:
                word = "small" if objects[env[var]].size < threshold else "big"
                return (word == value) != negate
        return f

    def _compile_spatial(self, node: SpatialTest) -> _Compiled:
        objects = self.ctx.objects
        rel = node.relation
        a = node.args[0]
        b = node.args[1]
        if rel == "left_of":
            return lambda env: objects[env[a]].x < objects[env[b]].x
        if rel == "right_of":
            return lambda env: objects[env[a]].x > objects[env[b]].x
        if rel == "above":
            return lambda env: objects[env[a]].y < objects[env[b]].y
        if rel == "below":
            return lambda env: objects[env[a]].y > objects[env[b]].y
        if rel == "same_shape":
            return lambda env: objects[env[a]].shape == objects[env[b]].shape
        if rel == "same_color":
            return lambda env: objects[env[a]].color == objects[env[b]].color
        if rel == "smaller":
            return lambda env: objects[env[a]].size < objects[env[b]].size
        if rel == "bigger":
            return lambda env: objects[env[a]].size > objects[env[b]].size
        if rel == "touches":
            def f_touch(env: _Env) -> bool:
                oa, ob = objects[env[a]], objects[env[b]]
                d = ((oa.x - ob.x) ** 2 + (oa.y - ob.y) ** 2) ** 0.5
                return abs(d - (oa.size + ob.size) / 2.0) <= TOUCH_TOLERANCE
            return f_touch
        if rel == "between":
            c = node.args[2]
            def f_between(env: _Env) -> bool:
                oa, ob, oc = objects[env[a]], objects[env[b]], objects[env[c]]
                return (
                    min(ob.x, oc.x) <= oa.x <= max(ob.x, oc.x)
                    and min(ob.y, oc.y) <= oa.y <= max(ob.y, oc.y)
                )
            return f_between
        raise ValueError(f"unknown relation {rel!r}")

    def _compile_quantifier(self, node: Quantifier) -> _Compiled:
        body = self.compile(node.body)
        variables = node.variables
        k = len(variables)
        sel = node.selector
        distinct = node.distinct
        exists = node.kind == "exists"

        def f(env: _Env) -> bool:
            domain = self.select(sel)
            if distinct:
                bindings = itertools.permutations(domain, k)
            else:
                bindings = itertools.product(domain, repeat=k)
            saved = [(v, env[v]) for v in variables if v in env]
            try:
                if exists:
                    for tup in bindings:
                        for v, i in zip(variables, tup):
                            env[v] = i
                        if body(env):
                            return True
                    return False
                for tup in bindings:
                    for v, i in zip(variables, tup):
                        env[v] = i
                    if not body(env):
                        return False
                return True
            finally:
                for v in variables:
                    env.pop(v, None)
                env.update(saved)

        return f

    def _compile_gestalt(self, node: GestaltTest) -> _Compiled:
        objects = self.ctx.objects
        gestalt = self.ctx.gestalt
        sel = node.selector
        if node.concept == "circular":
            def f(env: _Env) -> bool:
                objs = [objects[i] for i in self.select(sel)]
                if len(objs) < 3:
                    return False
                return is_circular_arrangement(objs, gestalt).is_circular
        elif node.concept == "symmetric":
            def f(env: _Env) -> bool:
                objs = [objects[i] for i in self.select(sel)]
                if len(objs) < 2:
                    return False
                return is_symmetric(objs, gestalt).is_symmetric
        else:
            k = node.k
            def f(env: _Env) -> bool:
                objs = [objects[i] for i in self.select(sel)]
                if not objs:
                    return k == 0
                return len(cluster_by_proximity(objs, gestalt)) == k
        return f


def evaluate(
    statement: Statement,
    figure: Figure,
    *,
    universe: UniverseConfig | None = None,
    gestalt_config: GestaltConfig | None = None,
) -> bool:
    """Evaluate a statement on one figure. Pure: no RNG, no mutation,
    and the object list order never affects the result."""
    u = universe or DEFAULT_UNIVERSE
    ctx = _Context(
        objects=figure.objects,
        small_big_threshold=u.small_big_threshold,
        gestalt=gestalt_config or GestaltConfig(),
    )
    ev = _Evaluator(ctx)
    return ev.compile(statement.root)({})


# --------------------------------------------------------------------------
# variable report


class VariableReport(NamedTuple):
    undeclared: frozenset[str]
    unused: frozenset[str]


def _used_vars(node: Node) -> frozenset[str]:
    if isinstance(node, AttrTest):
        return frozenset() if node.var == _IMPLICIT else frozenset([node.var])
    if isinstance(node, SideTest):
        return frozenset([node.var])
    if isinstance(node, SpatialTest):
        return frozenset(node.args)
    if isinstance(node, Not):
        return _used_vars(node.child)
    if isinstance(node, (And, Or)):
        out: frozenset[str] = frozenset()
        for c in node.children:
            out |= _used_vars(c)
        return out
    return frozenset()


def free_variables(statement: Statement) -> VariableReport:
    """Lint helper: variables used but never declared, and declared but
    never used. Anything the parser accepts has an empty undeclared set."""
    undeclared: set[str] = set()
    unused: set[str] = set()

    def walk(node: Node) -> None:
        if isinstance(node, Quantifier):
            used = _used_vars(node.body)
            declared = set(node.variables)
            undeclared.update(used - declared)
            unused.update(declared - used)
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or)):
            for c in node.children:
                walk(c)

    walk(statement.root)
    return VariableReport(undeclared=frozenset(undeclared), unused=frozenset(unused))


# --------------------------------------------------------------------------
# canonical keys (structural identity for split design)


def canonical_key(node: Node | Selector, rename: Mapping[str, str] | None = None) -> str:
    """Stable structural key: AND/OR children sorted, quantifier
    variables renamed in declaration order, so presentation differences
    collide while genuinely different structure does not."""
    r = rename or {}
    if isinstance(node, Selector):
        return "(sel " + (canonical_key(node.where, r) if node.where else "all") + ")"
    if isinstance(node, And):
        return "(and " + " ".join(sorted(canonical_key(c, r) for c in node.children)) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(sorted(canonical_key(c, r) for c in node.children)) + ")"
    if isinstance(node, Not):
        return "(not " + canonical_key(node.child, r) + ")"
    if isinstance(node, AttrTest):
        var = node.var if node.var == _IMPLICIT else r.get(node.var, node.var)
        return f"(attr {var} {node.attr} {node.op} {node.value})"
    if isinstance(node, SideTest):
        return f"(side {r.get(node.var, node.var)} {node.side})"
    if isinstance(node, SpatialTest):
        args = " ".join(r.get(a, a) for a in node.args)
        return f"(rel {node.relation} {args})"
    if isinstance(node, CountExpr):
        return "(count " + canonical_key(node.selector, r) + ")"
    if isinstance(node, CountCmp):
        right = f"(int {node.right})" if isinstance(node.right, int) else canonical_key(node.right, r)
        return f"(cmp {node.op} {canonical_key(node.left, r)} {right})"
    if isinstance(node, Quantifier):
        inner = dict(r)
        inner.update({v: f"v{i}" for i, v in enumerate(node.variables)})
        tag = node.kind + ("-distinct" if node.distinct else "")
        return (
            f"({tag} {len(node.variables)} "
            + canonical_key(node.selector, inner)
            + " "
            + canonical_key(node.body, inner)
            + ")"
        )
    if isinstance(node, GestaltTest):
        tail = f" {node.k}" if node.k is not None else ""
        return f"(gestalt {node.concept} " + canonical_key(node.selector, r) + tail + ")"
    raise TypeError(f"no canonical key for {node!r}")


def iter_nodes(node: Node) -> Iterator[Node]:
    """Depth-first walk over a node and everything below it, including
    quantifier bodies and selector predicates."""
    yield node
    if isinstance(node, (And, Or)):
        for c in node.children:
            yield from iter_nodes(c)
    elif isinstance(node, Not):
        yield from iter_nodes(node.child)
    elif isinstance(node, CountCmp):
        yield from iter_nodes(node.left)
        if isinstance(node.right, CountExpr):
            yield from iter_nodes(node.right)
    elif isinstance(node, CountExpr):
        if node.selector.where:
            yield from iter_nodes(node.selector.where)
    elif isinstance(node, Quantifier):
        if node.selector.where:
            yield from iter_nodes(node.selector.where)
        yield from iter_nodes(node.body)
    elif isinstance(node, GestaltTest):
        if node.selector.where:
            yield from iter_nodes(node.selector.where)


# --------------------------------------------------------------------------
# English rendering

_VOWELS = "aeiou"


def _plural(word: str, n: int | None = None) -> str:
    if n == 1:
        return word
    return word + "s"


def _fold_tests(node: Node | None) -> dict[str, str] | None:
    """Collapse a conjunction of positive attribute tests into an
    attr->value map; None when the predicate is richer than that."""
    if node is None:
        return {}
    tests: list[AttrTest] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, And):
            stack.extend(cur.children)
        elif isinstance(cur, AttrTest) and cur.op == "=":
            tests.append(cur)
        else:
            return None
    out: dict[str, str] = {}
    for t in tests:
        if t.attr in out and out[t.attr] != t.value:
            return None
        out[t.attr] = t.value
    return out


def _phrase_from_attrs(attrs: dict[str, str], n: int | None = None) -> str:
    words: list[str] = []
    if "size" in attrs:
        words.append(attrs["size"])
    if "color" in attrs:
        words.append(attrs["color"])
    noun = _plural(attrs.get("shape", "object"), n)
    words.append(noun)
    return " ".join(words)


def _noun_phrase(sel: Selector, n: int | None = None) -> str:
    attrs = _fold_tests(sel.where)
    if attrs is not None:
        return _phrase_from_attrs(attrs, n)
    return _plural("object", n) + " where " + _pred_text(sel.where, subject="it")


def _pred_text(node: Node, subject: str | None = None) -> str:
    def name(var: str) -> str:
        return subject if (subject and var == _IMPLICIT) else var

    if isinstance(node, And):
        return " and ".join(_pred_text(c, subject) for c in node.children)
    if isinstance(node, Or):
        return " or ".join(_pred_text(c, subject) for c in node.children)
    if isinstance(node, Not):
        inner = node.child
        if isinstance(inner, AttrTest):
            return _attr_text(inner, subject, negate=True)
        if isinstance(inner, SpatialTest) and inner.relation in ("same_shape", "same_color"):
            a, b = (name(v) for v in inner.args)
            noun = inner.relation.split("_")[1]
            return f"{a} and {b} have different {noun}s"
        return "not (" + _pred_text(inner, subject) + ")"
    if isinstance(node, AttrTest):
        return _attr_text(node, subject, negate=False)
    if isinstance(node, SideTest):
        return f"{name(node.var)} is on the {node.side} side"
    if isinstance(node, SpatialTest):
        args = [name(v) for v in node.args]
        rel = node.relation
        if rel == "left_of":
            return f"{args[0]} is left of {args[1]}"
        if rel == "right_of":
            return f"{args[0]} is right of {args[1]}"
        if rel == "above":
            return f"{args[0]} is above {args[1]}"
        if rel == "below":
            return f"{args[0]} is below {args[1]}"
        if rel == "between":
            return f"{args[0]} is between {args[1]} and {args[2]}"
        if rel == "touches":
            return f"{args[0]} touches {args[1]}"
        if rel == "same_shape":
            return f"{args[0]} and {args[1]} have the same shape"
        if rel == "same_color":
            return f"{args[0]} and {args[1]} have the same color"
        if rel == "smaller":
            return f"{args[0]} is smaller than {args[1]}"
        return f"{args[0]} is bigger than {args[1]}"
    raise TypeError(f"no text for predicate {node!r}")


def _attr_text(node: AttrTest, subject: str | None, negate: bool) -> str:
    var = subject if (subject and node.var == _IMPLICIT) else node.var
    positive = node.op == "=" if not negate else node.op != "="
    if node.attr == "shape":
        article = "an" if node.value[0] in _VOWELS else "a"
        verb = "is" if positive else "is not"
        return f"{var} {verb} {article} {node.value}"
    verb = "is" if positive else "is not"
    return f"{var} {verb} {node.value}"


def _exists_fold(node: Quantifier) -> str | None:
    """Single-variable EXISTS whose body is plain attribute tests folds
    into a noun phrase ("there is a red object" territory)."""
    if node.kind != "exists" or len(node.variables) != 1 or node.distinct:
        return None
    sel_attrs = _fold_tests(node.selector.where)
    if sel_attrs is None:
        return None
    body_attrs = _fold_tests(node.body)
    if body_attrs is None:
        return None
    merged = dict(sel_attrs)
    for k, v in body_attrs.items():
        if k in merged and merged[k] != v:
            return None
        merged[k] = v
    return _phrase_from_attrs(merged, n=1)


def _statement_text(node: Node) -> str:
    if isinstance(node, And):
        return " and ".join(_statement_text(c) for c in node.children)
    if isinstance(node, Or):
        return " or ".join(_statement_text(c) for c in node.children)
    if isinstance(node, Not):
        if isinstance(node.child, Quantifier):
            folded = _exists_fold(node.child)
            if folded is not None:
                return f"there is no {folded}"
        return "it is not the case that " + _statement_text(node.child)
    if isinstance(node, CountCmp):
        return _count_text(node)
    if isinstance(node, Quantifier):
        return _quant_text(node)
    if isinstance(node, GestaltTest):
        np = _noun_phrase(node.selector)
        if node.concept == "circular":
            return f"the {np} are arranged on a circle"
        if node.concept == "symmetric":
            return f"the {np} are arranged symmetrically"
        unit = "cluster" if node.k == 1 else "clusters"
        return f"the {np} form exactly {node.k} proximity {unit}"
    raise TypeError(f"no text for node {node!r}")


def _count_text(node: CountCmp) -> str:
    if isinstance(node.right, int):
        n = node.right
        np = _noun_phrase(node.left.selector, n)
        if node.op == "=":
            return f"the figure contains exactly {n} {np}"
        if node.op == "!=":
            return f"the figure does not contain exactly {n} {np}"
        if node.op == "<":
            return f"the figure contains fewer than {n} {np}"
        if node.op == "<=":
            return f"the figure contains at most {n} {np}"
        if node.op == ">":
            return f"the figure contains more than {n} {np}"
        return f"the figure contains at least {n} {np}"
    np1 = _noun_phrase(node.left.selector)
    np2 = _noun_phrase(node.right.selector)
    if node.op == "=":
        return f"the figure contains as many {np1} as {np2}"
    if node.op == "!=":
        return f"the figure contains a different number of {np1} than {np2}"
    if node.op == "<":
        return f"the figure contains fewer {np1} than {np2}"
    if node.op == "<=":
        return f"the figure contains at most as many {np1} as {np2}"
    if node.op == ">":
        return f"the figure contains more {np1} than {np2}"
    return f"the figure contains at least as many {np1} as {np2}"


def _quant_text(node: Quantifier) -> str:
    folded = _exists_fold(node)
    if folded is not None:
        article = "an" if folded[0] in _VOWELS else "a"
        return f"there is {article} {folded}"
    np = _noun_phrase(node.selector)
    names = ", ".join(node.variables)
    cond = _pred_text(node.body)
    distinct = "distinct " if node.distinct else ""
    if node.kind == "exists":
        if len(node.variables) == 1:
            return f"there is an object {names} among the {np} with {cond}"
        return f"there are {distinct}objects {names} among the {np} with {cond}"
    if len(node.variables) == 1:
        return f"every object {names} among the {np} satisfies {cond}"
    return f"for all {distinct}objects {names} among the {np}, {cond}"


def render_statement_text(statement: Statement) -> str:
    """Deterministic English for a statement; same AST, same text."""
    return _statement_text(statement.root)


# --------------------------------------------------------------------------
# statement files

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")


def load_statements(path: str | Path, universe: UniverseConfig | None = None) -> dict[str, Statement]:
    """Load a statement file.

    Two layouts: a bare statement (the file stem becomes its id), or a
    list of `name: statement` lines. Blank lines and lines starting
    with '#' are skipped in both.
    """
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseFailure(f"cannot read statement file: {e}", path=str(p)) from e
    lines = [
        (i + 1, ln.strip()) for i, ln in enumerate(raw.splitlines()) if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise ParseFailure("statement file is empty", path=str(p))

    def as_entry(text: str) -> tuple[str, str] | None:
        head, sep, rest = text.partition(":")
        if sep and _NAME_RE.match(head.strip()) and rest.strip():
            return head.strip(), rest.strip()
        return None

    entries = [as_entry(text) for _, text in lines]
    if all(e is not None for e in entries):
        out: dict[str, Statement] = {}
        for (lineno, _), entry in zip(lines, entries):
            name, text = entry  # type: ignore[misc]
            if name in out:
                raise ParseFailure(f"duplicate statement id {name!r}", path=str(p), line=lineno)
            out[name] = parse_statement(text, universe)
        return out
    source = " ".join(text for _, text in lines)
    return {p.stem: parse_statement(source, universe)}


def save_statements(statements: Mapping[str, Statement], path: str | Path) -> None:
    """Write statements as a `name: statement` list, one per line."""
    body = "".join(f"{name}: {' '.join(st.source.split())}\n" for name, st in statements.items())
    Path(path).write_text(body, encoding="utf-8")
