"""Definition language (GDL) and problem declaration language (CDL).

Both languages share one tokenizer and one term grammar.  A GDL file is a
sequence of ``;``-terminated declarations::

    Predicate Polygon(A,B,C) reps (B,C,A),(C,A,B) extend Angle(A,B,C);
    Attribute LengthOfLine(A,B) reps (B,A) unit length;
    Theorem line_addition(A,B,C) {
        branch 1: premise Collinear(A,B,C);
                  conclude Equal(LengthOfLine(A,C),Add(LengthOfLine(A,B),LengthOfLine(B,C)));
    }

A CDL problem declares its points, ground facts, ground equations and one
goal::

    Points A,B,C;
    Polygon(A,B,C);
    Equal(MeasureOfAngle(A,B,C),60);
    Goal Value(MeasureOfAngle(B,C,A));

Identifiers are case-sensitive.  Points (and theorem variables) are a single
uppercase letter optionally followed by digits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterable, NamedTuple, Optional, Sequence, Union

__all__ = [
    "Attr", "Num", "Op", "Term", "Eq", "Fact",
    "PredicateSchema", "AttributeSchema", "TheoremBranch", "TheoremSchema",
    "Library", "Problem", "RelationGoal", "ValueGoal", "EquationGoal", "Goal",
    "FormalLanguageError", "ParseError", "UnknownReferenceError",
    "DuplicateNameError", "SchemaError", "ArityError", "UndeclaredPointError",
    "parse_gdl", "parse_cdl", "parse_term", "parse_equation", "parse_goal",
    "parse_fact", "problem_from_dict", "problem_to_dict",
    "format_term", "format_fact", "format_equation", "format_goal",
    "format_library", "format_problem", "UNITS", "OPERATORS",
]

UNITS = ("degrees", "length", "area", "scalar")
OPERATORS = {"Add": (2, None), "Sub": (2, 2), "Mul": (2, None),
             "Div": (2, 2), "Pow": (2, 2), "Sqrt": (1, 1)}
_RESERVED = set(OPERATORS) | {"Equal", "Value", "Goal", "Points", "Predicate",
                              "Attribute", "Theorem"}
_POINT_RE = re.compile(r"[A-Z][0-9]*\Z")


# --------------------------------------------------------------------------
# errors


class FormalLanguageError(Exception):
    """Base class for every parse or validation failure."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ParseError(FormalLanguageError):
    pass


class UnknownReferenceError(FormalLanguageError):
    pass


class DuplicateNameError(FormalLanguageError):
    pass


class SchemaError(FormalLanguageError):
    pass


class ArityError(FormalLanguageError):
    pass


class UndeclaredPointError(FormalLanguageError):
    pass


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True, order=True)
class Attr:
    """Attribute application, e.g. ``LengthOfLine(A,B)``.

    In theorem templates the points are variable names; in problems and
    states they are canonical point tuples, and the object doubles as the
    algebraic symbol.
    """

    name: str
    points: tuple

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.points)})"


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __str__(self) -> str:
        return _format_fraction(self.value)


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.op}({','.join(str(a) for a in self.args)})"


Term = Union[Attr, Num, Op]


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"Equal({self.lhs},{self.rhs})"


class Fact(NamedTuple):
    predicate: str
    points: tuple

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.points)})"


def term_attrs(term: Term) -> Iterable[Attr]:
    if isinstance(term, Attr):
        yield term
    elif isinstance(term, Op):
        for a in term.args:
            yield from term_attrs(a)


def equation_attrs(eq: Eq) -> list:
    return [*term_attrs(eq.lhs), *term_attrs(eq.rhs)]


def map_term(term: Term, fn) -> Term:
    """Rebuild ``term`` with every :class:`Attr` replaced by ``fn(attr)``."""
    if isinstance(term, Attr):
        return fn(term)
    if isinstance(term, Op):
        return Op(term.op, tuple(map_term(a, fn) for a in term.args))
    return term


# --------------------------------------------------------------------------
# schemas


def _check_group(perms: Sequence[tuple], arity: int, what: str, line=None):
    identity = tuple(range(arity))
    group = set(perms) | {identity}
    for p in group:
        for q in group:
            if tuple(p[q[i]] for i in range(arity)) not in group:
                raise SchemaError(
                    f"representations of {what} are not closed under composition",
                    line)


class _Symmetric:
    """Shared representation logic for predicates and attributes."""

    name: str
    params: tuple
    reps: tuple

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def group(self) -> tuple:
        identity = tuple(range(self.arity))
        return (identity,) + tuple(p for p in self.reps if p != identity)

    def variants(self, points: Sequence[str]) -> list:
        """Every point tuple denoting the same object as ``points``."""
        seen = []
        for perm in self.group:
            v = tuple(points[i] for i in perm)
            if v not in seen:
                seen.append(v)
        return seen

    def canonical(self, points: Sequence[str]) -> tuple:
        if len(points) != self.arity:
            raise ArityError(
                f"{self.name} expects {self.arity} points, got {len(points)}")
        return min(tuple(points[i] for i in perm) for perm in self.group)


@dataclass(frozen=True)
class PredicateSchema(_Symmetric):
    name: str
    params: tuple
    reps: tuple = ()
    extensions: tuple = ()

    @property
    def representations(self) -> tuple:
        return self.group


@dataclass(frozen=True)
class AttributeSchema(_Symmetric):
    name: str
    params: tuple
    reps: tuple = ()
    unit: str = "scalar"

    @property
    def representations(self) -> tuple:
        return self.group


@dataclass(frozen=True)
class TheoremBranch:
    index: int
    premise_facts: tuple
    premise_equations: tuple = ()
    conclusion_facts: tuple = ()
    conclusion_equations: tuple = ()

    def premise_variables(self) -> list:
        out = []
        for f in self.premise_facts:
            for v in f.points:
                if v not in out:
                    out.append(v)
        return out


@dataclass(frozen=True)
class TheoremSchema:
    name: str
    variables: tuple
    branches: tuple

    def branch(self, index: int) -> TheoremBranch:
        return self.branches[index - 1]


@dataclass(frozen=True)
class Library:
    """A validated set of predicate, attribute and theorem schemas."""

    predicates: dict = field(default_factory=dict)
    attributes: dict = field(default_factory=dict)
    theorems: tuple = ()

    def theorem(self, name: str) -> TheoremSchema:
        for t in self.theorems:
            if t.name == name:
                return t
        raise UnknownReferenceError(f"unknown theorem {name!r}")

    def canonical_fact(self, fact: Fact) -> Fact:
        schema = self.predicates.get(fact.predicate)
        if schema is None:
            raise UnknownReferenceError(f"unknown predicate {fact.predicate!r}")
        return Fact(fact.predicate, schema.canonical(fact.points))

    def canonical_attr(self, attr: Attr) -> Attr:
        schema = self.attributes.get(attr.name)
        if schema is None:
            raise UnknownReferenceError(f"unknown attribute {attr.name!r}")
        return Attr(attr.name, schema.canonical(attr.points))

    def canonical_term(self, term: Term) -> Term:
        return map_term(term, self.canonical_attr)

    def canonical_equation(self, eq: Eq) -> Eq:
        return Eq(self.canonical_term(eq.lhs), self.canonical_term(eq.rhs))


# --------------------------------------------------------------------------
# goals and problems


@dataclass(frozen=True)
class RelationGoal:
    fact: Fact


@dataclass(frozen=True)
class ValueGoal:
    term: Term
    target: Optional[Fraction] = None


@dataclass(frozen=True)
class EquationGoal:
    equation: Eq


Goal = Union[RelationGoal, ValueGoal, EquationGoal]


@dataclass(frozen=True)
class Problem:
    points: tuple
    construction: tuple
    conditions: tuple
    goal: Goal


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),;:{}&=\-])
""", re.VERBOSE)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _parse_number(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ParseError(f"zero denominator in {text}")
        return Fraction(Fraction(num), int(den))
    return Fraction(text)


def _format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None, cls=ParseError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.column)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {shown!r}")
        tok = self.tok
        self.i += 1
        return tok

    def point(self, what: str = "point") -> str:
        tok = self.ident(what)
        if not _POINT_RE.match(tok.text):
            raise self.error(f"{tok.text!r} is not a valid {what} name", tok)
        return tok.text

    def point_list(self, what: str = "point") -> tuple:
        self.expect("(")
        pts = [self.point(what)]
        while self.accept(","):
            pts.append(self.point(what))
        self.expect(")")
        return tuple(pts)

    def number(self) -> Fraction:
        sign = -1 if self.accept("-") else 1
        if self.tok.kind != "number":
            raise self.error(f"expected number, found {self.tok.text!r}")
        tok = self.tok
        self.i += 1
        try:
            return sign * _parse_number(tok.text)
        except ParseError as exc:
            raise self.error(exc.message, tok) from None

    def term(self) -> Term:
        if self.tok.kind == "number" or self.at("-"):
            return Num(self.number())
        tok = self.ident("term")
        if tok.text in OPERATORS:
            lo, hi = OPERATORS[tok.text]
            self.expect("(")
            args = [self.term()]
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise self.error(f"{tok.text} takes {lo if lo == hi else f'at least {lo}'}"
                                 f" argument(s), got {len(args)}", tok, ArityError)
            if tok.text == "Pow":
                e = args[1]
                if not (isinstance(e, Num) and e.value.denominator == 1):
                    raise self.error("Pow exponent must be an integer constant", tok)
            if tok.text == "Div" and isinstance(args[1], Num) and args[1].value == 0:
                raise self.error("division by the constant zero", tok)
            return Op(tok.text, tuple(args))
        return Attr(tok.text, self.point_list())

    def equation(self) -> Eq:
        self.expect("Equal")
        self.expect("(")
        lhs = self.term()
        self.expect(",")
        rhs = self.term()
        self.expect(")")
        return Eq(lhs, rhs)

    def item(self):
        """A fact pattern or an ``Equal(...)`` equation."""
        if self.at("Equal"):
            return self.equation()
        tok = self.ident("predicate")
        if tok.text in _RESERVED:
            raise self.error(f"{tok.text!r} cannot be used as a predicate", tok)
        return Fact(tok.text, self.point_list()), tok

    def at_eof(self) -> bool:
        return self.tok.kind == "eof"


# --------------------------------------------------------------------------
# GDL


def parse_gdl(source: str) -> Library:
    """Parse and validate a definition-language source into a :class:`Library`."""
    p = _Parser(source)
    predicates: dict = {}
    attributes: dict = {}
    theorems: list = []
    where: dict = {}          # name -> token, for error positions
    pending_refs: list = []   # (Fact|Attr, token, context)

    def claim(tok: Token):
        if tok.text in where or tok.text in _RESERVED:
            raise DuplicateNameError(f"duplicate name {tok.text!r}", tok.line, tok.column)
        where[tok.text] = tok

    def reps_of(params: tuple, owner: str) -> tuple:
        reps = []
        if p.accept("reps"):
            while True:
                tok = p.tok
                perm = p.point_list("parameter")
                if sorted(perm) != sorted(params):
                    raise SchemaError(f"representation {perm} of {owner} is not a "
                                      f"permutation of {params}", tok.line, tok.column)
                reps.append(tuple(params.index(v) for v in perm))
                if not p.accept(","):
                    break
        return tuple(reps)

    def params_of(owner: Token) -> tuple:
        params = p.point_list("parameter")
        if len(set(params)) != len(params):
            raise SchemaError(f"repeated parameter in {owner.text}", owner.line, owner.column)
        return params

    while not p.at_eof():
        kw = p.ident("declaration")
        if kw.text == "Predicate":
            name = p.ident("predicate name")
            claim(name)
            params = params_of(name)
            reps = reps_of(params, name.text)
            _check_group(reps, len(params), name.text, name.line)
            extensions = []
            if p.accept("extend"):
                while True:
                    item = p.item()
                    if isinstance(item, Eq):
                        raise p.error("extensions must be facts, not equations")
                    fact, tok = item
                    for v in fact.points:
                        if v not in params:
                            raise SchemaError(f"extension {fact} of {name.text} uses "
                                              f"unknown parameter {v}", tok.line, tok.column)
                    extensions.append(fact)
                    pending_refs.append((fact, tok))
                    if not p.accept(","):
                        break
            p.expect(";")
            predicates[name.text] = PredicateSchema(name.text, params, reps, tuple(extensions))
        elif kw.text == "Attribute":
            name = p.ident("attribute name")
            claim(name)
            params = params_of(name)
            reps = reps_of(params, name.text)
            _check_group(reps, len(params), name.text, name.line)
            p.expect("unit")
            unit = p.ident("unit")
            if unit.text not in UNITS:
                raise p.error(f"unknown unit {unit.text!r}", unit, SchemaError)
            p.expect(";")
            attributes[name.text] = AttributeSchema(name.text, params, reps, unit.text)
        elif kw.text == "Theorem":
            theorems.append(_parse_theorem(p, claim, pending_refs))
        else:
            raise p.error(f"unknown declaration {kw.text!r}", kw)

    lib = Library(predicates, attributes, tuple(theorems))
    for ref, tok in pending_refs:
        _resolve(lib, ref, tok)
    return lib


def _parse_theorem(p: _Parser, claim, pending_refs) -> TheoremSchema:
    name = p.ident("theorem name")
    claim(name)
    variables = p.point_list("variable")
    if len(set(variables)) != len(variables):
        raise SchemaError(f"repeated variable in theorem {name.text}", name.line, name.column)
    p.expect("{")
    branches = []
    while p.at("branch"):
        btok = p.expect("branch")
        idx_tok = p.tok
        index = p.number()
        if index != len(branches) + 1:
            raise SchemaError(f"branch indices of {name.text} must be dense from 1; "
                              f"expected {len(branches) + 1}, got {index}",
                              idx_tok.line, idx_tok.column)
        p.expect(":")
        p.expect("premise")
        premise = [_item_with_pos(p)]
        while p.accept("&"):
            premise.append(_item_with_pos(p))
        p.expect(";")
        p.expect("conclude")
        conclusion = [_item_with_pos(p)]
        while p.accept(","):
            conclusion.append(_item_with_pos(p))
        p.expect(";")
        branches.append(_build_branch(name.text, int(index), variables, premise,
                                      conclusion, btok, pending_refs))
    if not branches:
        raise p.error(f"theorem {name.text} has no branches", name, SchemaError)
    p.expect("}")
    p.accept(";")
    return TheoremSchema(name.text, variables, tuple(branches))


def _item_with_pos(p: _Parser):
    tok = p.tok
    item = p.item()
    if isinstance(item, Eq):
        return item, tok
    return item


def _build_branch(theorem, index, variables, premise, conclusion, btok, pending_refs):
    pf, pe, cf, ce = [], [], [], []
    for item, tok in premise:
        (pe if isinstance(item, Eq) else pf).append(item)
        pending_refs.append((item, tok))
    for item, tok in conclusion:
        (ce if isinstance(item, Eq) else cf).append(item)
        pending_refs.append((item, tok))
    if not pf:
        raise SchemaError(f"{theorem} branch {index}: premise needs at least one "
                          f"fact pattern", btok.line, btok.column)

    def used(items):
        out = set()
        for it in items:
            if isinstance(it, Eq):
                out.update(v for a in equation_attrs(it) for v in a.points)
            else:
                out.update(it.points)
        return out

    fact_vars = used(pf)
    for item, tok in premise + conclusion:
        for v in used([item]):
            if v not in variables:
                raise SchemaError(f"{theorem} branch {index}: variable {v} is not "
                                  f"declared by the theorem", tok.line, tok.column)
    for item, tok in premise:
        if isinstance(item, Eq):
            missing = used([item]) - fact_vars
            if missing:
                raise SchemaError(f"{theorem} branch {index}: equation premise uses "
                                  f"{sorted(missing)} not bound by any fact pattern",
                                  tok.line, tok.column)
    for item, tok in conclusion:
        free = used([item]) - fact_vars
        if free:
            raise SchemaError(f"{theorem} branch {index}: free conclusion variable(s) "
                              f"{sorted(free)}", tok.line, tok.column)
    return TheoremBranch(index, tuple(pf), tuple(pe), tuple(cf), tuple(ce))


def _resolve(lib: Library, ref, tok: Token):
    if isinstance(ref, Eq):
        for a in equation_attrs(ref):
            _resolve(lib, a, tok)
        return
    if isinstance(ref, Fact):
        schema = lib.predicates.get(ref.predicate)
        kind = "predicate"
    else:
        schema = lib.attributes.get(ref.name)
        kind = "attribute"
    label = ref.predicate if isinstance(ref, Fact) else ref.name
    if schema is None:
        raise UnknownReferenceError(f"unknown {kind} {label!r}", tok.line, tok.column)
    if schema.arity != len(ref.points):
        raise ArityError(f"{label} expects {schema.arity} points, got {len(ref.points)}",
                         tok.line, tok.column)


# --------------------------------------------------------------------------
# CDL


def _check_ground(lib: Library, ref, points: set, tok=None):
    line, col = (tok.line, tok.column) if tok else (None, None)
    if isinstance(ref, Eq):
        for a in equation_attrs(ref):
            _check_ground(lib, a, points, tok)
        return
    if isinstance(ref, (Op, Num)):
        for a in term_attrs(ref):
            _check_ground(lib, a, points, tok)
        return
    _resolve(lib, ref, tok or Token("eof", "", None, None))
    for v in ref.points:
        if v not in points:
            raise UndeclaredPointError(f"point {v} is not declared", line, col)
    if len(set(ref.points)) != len(ref.points):
        raise SchemaError(f"{ref} repeats a point", line, col)


def _canonical_goal(lib: Library, goal: Goal) -> Goal:
    if isinstance(goal, RelationGoal):
        return RelationGoal(lib.canonical_fact(goal.fact))
    if isinstance(goal, ValueGoal):
        return ValueGoal(lib.canonical_term(goal.term), goal.target)
    return EquationGoal(lib.canonical_equation(goal.equation))


def _goal(p: _Parser) -> Goal:
    if p.at("Value"):
        p.expect("Value")
        p.expect("(")
        term = p.term()
        p.expect(")")
        target = p.number() if p.accept("=") else None
        return ValueGoal(term, target)
    item = p.item()
    if isinstance(item, Eq):
        return EquationGoal(item)
    return RelationGoal(item[0])


def parse_cdl(source: str, lib: Library) -> Problem:
    """Parse a problem declaration; facts and symbols come back canonical."""
    p = _Parser(source)
    points = None
    facts, equations = [], []
    goal = None
    checks = []
    while not p.at_eof():
        tok = p.tok
        if p.accept("Points"):
            if points is not None:
                raise p.error("duplicate Points declaration", tok)
            pts = [p.point()]
            while p.accept(","):
                pts.append(p.point())
            if len(set(pts)) != len(pts):
                raise p.error("a point is declared twice", tok, SchemaError)
            points = tuple(pts)
        elif p.accept("Goal"):
            if goal is not None:
                raise p.error("duplicate Goal", tok)
            goal = _goal(p)
            checks.append((goal, tok))
            if p.at_eof():
                break
        else:
            item = p.item()
            if isinstance(item, Eq):
                equations.append(item)
                checks.append((item, tok))
            else:
                facts.append(item[0])
                checks.append((item[0], item[1]))
        p.expect(";")
    if points is None:
        raise ParseError("missing Points declaration", 1, 1)
    if goal is None:
        raise ParseError("missing Goal", p.tok.line, p.tok.column)
    return _build_problem(lib, points, facts, equations, goal, checks)


def _build_problem(lib, points, facts, equations, goal, checks) -> Problem:
    declared = set(points)
    for ref, tok in checks:
        if isinstance(ref, RelationGoal):
            ref = ref.fact
        elif isinstance(ref, ValueGoal):
            ref = ref.term
        elif isinstance(ref, EquationGoal):
            ref = ref.equation
        _check_ground(lib, ref, declared, tok)
    canon_facts = []
    for f in facts:
        c = lib.canonical_fact(f)
        if c not in canon_facts:
            canon_facts.append(c)
    canon_eqs = [lib.canonical_equation(e) for e in equations]
    return Problem(tuple(points), tuple(canon_facts), tuple(canon_eqs),
                   _canonical_goal(lib, goal))


def _parse_fragment(source: str, rule):
    p = _Parser(source)
    out = rule(p)
    if not p.at_eof():
        raise p.error(f"unexpected trailing input {p.tok.text!r}")
    return out


def parse_term(source: str) -> Term:
    return _parse_fragment(source, _Parser.term)


def parse_equation(source: str) -> Eq:
    return _parse_fragment(source, _Parser.equation)


def parse_goal(source: str) -> Goal:
    return _parse_fragment(source, _goal)


def parse_fact(source: str) -> Fact:
    item = _parse_fragment(source, _Parser.item)
    if isinstance(item, Eq):
        raise ParseError(f"expected a fact, found an equation: {source}")
    return item[0]


def problem_from_dict(data: dict, lib: Library) -> Problem:
    """Build a problem from the JSON problem-file layout.

    Facts are ``{"predicate": name, "points": [...]}`` objects (a bare
    ``"Pred(A,B)"`` string is accepted too); equations and the goal are
    strings in the declaration grammar.
    """
    try:
        points = tuple(data["points"])
        goal_src = data["goal"]
    except KeyError as exc:
        raise SchemaError(f"problem is missing field {exc.args[0]!r}") from None
    for pt in points:
        if not isinstance(pt, str) or not _POINT_RE.match(pt):
            raise SchemaError(f"invalid point name {pt!r}")
    if len(set(points)) != len(points):
        raise SchemaError("a point is declared twice")
    facts = []
    for raw in data.get("construction", []):
        if isinstance(raw, str):
            facts.append(parse_fact(raw))
        else:
            facts.append(Fact(raw["predicate"], tuple(raw["points"])))
    equations = [parse_equation(s) for s in data.get("conditions", [])]
    goal = parse_goal(goal_src)
    checks = [(f, None) for f in facts] + [(e, None) for e in equations] + [(goal, None)]
    return _build_problem(lib, points, facts, equations, goal, checks)


def problem_to_dict(problem: Problem) -> dict:
    return {
        "points": list(problem.points),
        "construction": [{"predicate": f.predicate, "points": list(f.points)}
                         for f in problem.construction],
        "conditions": [format_equation(e) for e in problem.conditions],
        "goal": format_goal(problem.goal),
    }


# --------------------------------------------------------------------------
# pretty printing


def format_term(term: Term) -> str:
    return str(term)


def format_fact(fact: Fact) -> str:
    return str(fact)


def format_equation(eq: Eq) -> str:
    return str(eq)


def format_goal(goal: Goal) -> str:
    if isinstance(goal, RelationGoal):
        return format_fact(goal.fact)
    if isinstance(goal, EquationGoal):
        return format_equation(goal.equation)
    out = f"Value({format_term(goal.term)})"
    if goal.target is not None:
        out += f"={_format_fraction(goal.target)}"
    return out


def _format_reps(params: tuple, reps: tuple) -> str:
    if not reps:
        return ""
    shown = ",".join("(" + ",".join(params[i] for i in perm) + ")" for perm in reps)
    return f" reps {shown}"


def format_library(lib: Library) -> str:
    lines = []
    for s in lib.predicates.values():
        ext = ""
        if s.extensions:
            ext = " extend " + ",".join(map(str, s.extensions))
        lines.append(f"Predicate {s.name}({','.join(s.params)})"
                     f"{_format_reps(s.params, s.reps)}{ext};")
    for s in lib.attributes.values():
        lines.append(f"Attribute {s.name}({','.join(s.params)})"
                     f"{_format_reps(s.params, s.reps)} unit {s.unit};")
    for t in lib.theorems:
        lines.append(f"Theorem {t.name}({','.join(t.variables)}) {{")
        for b in t.branches:
            premise = " & ".join([*map(str, b.premise_facts), *map(str, b.premise_equations)])
            conclude = ", ".join([*map(str, b.conclusion_facts),
                                  *map(str, b.conclusion_equations)])
            lines.append(f"  branch {b.index}: premise {premise}; conclude {conclude};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def format_problem(problem: Problem) -> str:
    lines = [f"Points {','.join(problem.points)};"]
    lines += [f"{f};" for f in problem.construction]
    lines += [f"{e};" for e in problem.conditions]
    lines.append(f"Goal {format_goal(problem.goal)};")
    return "\n".join(lines) + "\n"


def all_permutations(params: Sequence[str]) -> list:
    """Every non-identity permutation of ``params``; handy for fully symmetric schemas."""
    params = tuple(params)
    return [p for p in permutations(params) if p != params]
