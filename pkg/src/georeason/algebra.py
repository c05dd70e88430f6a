"""Exact-rational equation store and fixpoint solver.

Every equation is kept as written (a pair of terms over attribute symbols).
Solving repeatedly substitutes the known symbol values, turns what is left
into a sparse polynomial, runs Gauss-Jordan elimination on the linear part
and extracts roots of pure powers (``a*x**n + c``).  Nothing here ever
touches a float.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple

from .lang import Attr, AttributeSchema, Eq, Num, Op, Term, equation_attrs, term_attrs

__all__ = [
    "AlgebraError", "InconsistentSystem", "EvaluationError", "NotPolynomial",
    "canonical_symbol", "to_poly", "equation_key", "rational_root",
    "EquationStore",
]

Monomial = Tuple[Tuple[Attr, int], ...]
Poly = Dict[Monomial, Fraction]

ONE: Monomial = ()


class AlgebraError(Exception):
    pass


class InconsistentSystem(AlgebraError):
    """A substituted equation collapsed to a false constant identity."""


class EvaluationError(AlgebraError):
    """Division by zero or a square root of a negative number."""


class NotPolynomial(AlgebraError):
    """The term is not a polynomial under the current substitution."""


def canonical_symbol(schema: AttributeSchema, points) -> Attr:
    return Attr(schema.name, schema.canonical(tuple(points)))


# --------------------------------------------------------------------------
# polynomial arithmetic


def _add(p: Poly, q: Poly, scale: Fraction = Fraction(1)) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers: Dict[Attr, int] = dict(a)
    for s, e in b:
        powers[s] = powers.get(s, 0) + e
    return tuple(sorted(powers.items()))


def _mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _const(p: Poly) -> Optional[Fraction]:
    if not p:
        return Fraction(0)
    if len(p) == 1 and ONE in p:
        return p[ONE]
    return None


def _iroot(k: int, n: int) -> Optional[int]:
    """Exact integer n-th root of k >= 0, or None."""
    if k < 2:
        return k
    x = 1 << ((k.bit_length() + n - 1) // n)
    while True:
        y = ((n - 1) * x + k // x ** (n - 1)) // n
        if y >= x:
            break
        x = y
    return x if x ** n == k else None


def rational_root(value: Fraction, n: int) -> Optional[Fraction]:
    """The real n-th root of ``value`` when it is rational.

    Even roots are nonnegative; negative radicands of even roots have none.
    """
    value = Fraction(value)
    if n == 1:
        return value
    sign = 1
    if value < 0:
        if n % 2 == 0:
            return None
        sign, value = -1, -value
    num = _iroot(value.numerator, n)
    den = _iroot(value.denominator, n)
    if num is None or den is None:
        return None
    return sign * Fraction(num, den)


def to_poly(term: Term, values: Optional[Dict[Attr, Fraction]] = None) -> Poly:
    """Expand ``term`` into a polynomial, substituting ``values``.

    Raises NotPolynomial for division by (or square root of) something that
    is not a known constant, and EvaluationError for a zero divisor or an
    even root of a negative constant.
    """
    if isinstance(term, Num):
        return {ONE: term.value} if term.value else {}
    if isinstance(term, Attr):
        if values is not None and term in values:
            v = values[term]
            return {ONE: v} if v else {}
        return {((term, 1),): Fraction(1)}
    op, args = term.op, term.args
    if op == "Add":
        out: Poly = {}
        for a in args:
            out = _add(out, to_poly(a, values))
        return out
    if op == "Sub":
        return _add(to_poly(args[0], values), to_poly(args[1], values), Fraction(-1))
    if op == "Mul":
        out = {ONE: Fraction(1)}
        for a in args:
            out = _mul(out, to_poly(a, values))
        return out
    if op == "Div":
        den = _const(to_poly(args[1], values))
        if den is None:
            raise NotPolynomial(f"non-constant divisor in {term}")
        if den == 0:
            raise EvaluationError(f"division by zero in {term}")
        num = to_poly(args[0], values)
        return {m: c / den for m, c in num.items()}
    if op == "Pow":
        base = to_poly(args[0], values)
        exp = int(args[1].value)
        if exp < 0:
            c = _const(base)
            if c is None:
                raise NotPolynomial(f"negative power of a non-constant in {term}")
            if c == 0:
                raise EvaluationError(f"zero to a negative power in {term}")
            return {ONE: c ** exp}
        out = {ONE: Fraction(1)}
        for _ in range(exp):
            out = _mul(out, base)
        return out
    if op == "Sqrt":
        c = _const(to_poly(args[0], values))
        if c is None:
            raise NotPolynomial(f"square root of a non-constant in {term}")
        if c < 0:
            raise EvaluationError(f"square root of a negative number in {term}")
        root = rational_root(c, 2)
        if root is None:
            raise NotPolynomial(f"irrational square root in {term}")
        return {ONE: root} if root else {}
    raise ValueError(f"unknown operator {op}")


def _difference(eq: Eq) -> Term:
    return Op("Sub", (eq.lhs, eq.rhs))


def _degree(p: Poly) -> int:
    return max((sum(e for _, e in m) for m in p), default=0)


@lru_cache(maxsize=1 << 17)
def _base_poly(eq: Eq) -> Optional[Poly]:
    """``lhs - rhs`` with nothing substituted, or None if not polynomial.

    Cached; callers must not mutate the returned dict.
    """
    try:
        return to_poly(_difference(eq))
    except (NotPolynomial, EvaluationError):
        return None


def _substitute(p: Poly, values: Dict[Attr, Fraction]) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        rest = []
        for s, e in m:
            v = values.get(s)
            if v is None:
                rest.append((s, e))
            else:
                c = c * v ** e
        if c:
            key = tuple(rest)
            total = out.get(key, 0) + c
            if total:
                out[key] = total
            else:
                out.pop(key, None)
    return out


def _residual(eq: Eq, values: Dict[Attr, Fraction]) -> Poly:
    base = _base_poly(eq)
    if base is not None:
        return _substitute(base, values)
    return to_poly(_difference(eq), values)


@lru_cache(maxsize=1 << 17)
def equation_key(eq: Eq):
    """Normal form used to spot duplicate equations; None for tautologies.

    Polynomial equations become ``lhs - rhs`` with sorted monomials, scaled so
    the leading non-constant coefficient is 1.  Anything else falls back to
    the sorted pair of printed sides.
    """
    p = _base_poly(eq)
    if p is None:
        return ("raw",) + tuple(sorted((str(eq.lhs), str(eq.rhs))))
    if not p:
        return None
    monos = sorted(p)
    lead = next((m for m in monos if m != ONE), ONE)
    scale = p[lead]
    return ("poly",) + tuple((m, p[m] / scale) for m in monos)


# --------------------------------------------------------------------------
# the store


class EquationStore:
    """Equations, the symbols they pin down, and where each value came from.

    ``provenance[sym]`` is ``(equation indices, substituted symbols)``: the
    stored equations the value was eliminated from and the already-known
    symbols that were substituted into them.
    """

    def __init__(self):
        self.equations: List[Eq] = []
        self.keys: Dict[tuple, int] = {}
        self.determined: Dict[Attr, Fraction] = {}
        self.provenance: Dict[Attr, Tuple[Tuple[int, ...], Tuple[Attr, ...]]] = {}
        self.generation = 0
        self.pending: Tuple[int, ...] = ()

    def copy(self) -> "EquationStore":
        new = EquationStore.__new__(EquationStore)
        new.equations = list(self.equations)
        new.keys = dict(self.keys)
        new.determined = dict(self.determined)
        new.provenance = dict(self.provenance)
        new.generation = self.generation
        new.pending = self.pending
        return new

    def __len__(self) -> int:
        return len(self.equations)

    def index_of(self, eq: Eq) -> Optional[int]:
        key = equation_key(eq)
        return None if key is None else self.keys.get(key)

    def add_equation(self, eq: Eq) -> bool:
        """Store ``eq`` unless it is a tautology or already present."""
        key = equation_key(eq)
        if key is None or key in self.keys:
            return False
        self.keys[key] = len(self.equations)
        self.equations.append(eq)
        self.pending = self.pending + (len(self.equations) - 1,)
        return True

    # -- evaluation -------------------------------------------------------

    def value_of(self, term: Term) -> Optional[Fraction]:
        """Exact value of ``term`` or None when some symbol is unknown."""
        try:
            p = to_poly(term, self.determined)
        except NotPolynomial:
            return None
        return _const(p)

    def residual(self, eq: Eq) -> Optional[Poly]:
        """``lhs - rhs`` after substitution; None if not polynomial."""
        try:
            return _residual(eq, self.determined)
        except NotPolynomial:
            return None

    def support(self, eq: Eq):
        """How ``eq`` is known to hold, or None.

        Returns ``("equation", index)`` when it is stored verbatim (up to
        normalisation) and ``("values", symbols)`` when substituting the known
        values makes both sides identical.
        """
        key = equation_key(eq)
        if key is None:
            return ("values", ())
        if key in self.keys:
            return ("equation", self.keys[key])
        try:
            p = self.residual(eq)
        except EvaluationError:
            return None
        if p is not None and not p:
            syms = sorted({a for a in equation_attrs(eq) if a in self.determined})
            return ("values", tuple(syms))
        return None

    def holds(self, eq: Eq) -> bool:
        return self.support(eq) is not None

    def is_redundant(self, eq: Eq) -> bool:
        """True when adding ``eq`` would tell the store nothing new."""
        return self.holds(eq)

    # -- solving ----------------------------------------------------------

    def solve(self) -> List[Attr]:
        """Run substitution and elimination to a fixpoint.

        Returns the newly determined symbols in the order they were pinned.
        """
        newly: List[Attr] = []
        while True:
            pins = self._pass()
            if not pins:
                break
            for sym in sorted(pins):
                value, prov = pins[sym]
                self.determined[sym] = value
                self.provenance[sym] = prov
                newly.append(sym)
            self.generation += 1
        return newly

    def _substituted(self, idx: int) -> Tuple[Attr, ...]:
        return tuple(sorted({a for a in equation_attrs(self.equations[idx])
                             if a in self.determined}))

    def _pass(self) -> Dict[Attr, Tuple[Fraction, tuple]]:
        rows = []
        pins: Dict[Attr, Tuple[Fraction, tuple]] = {}
        pending = []

        def pin(sym, value, sources):
            subs = sorted({s for i in sources for s in self._substituted(i)})
            if sym in pins and pins[sym][0] != value:
                raise InconsistentSystem(f"{sym} pinned to both {pins[sym][0]} and {value}")
            if sym not in pins:
                pins[sym] = (value, (tuple(sorted(sources)), tuple(subs)))

        for idx, eq in enumerate(self.equations):
            try:
                p = _residual(eq, self.determined)
            except NotPolynomial:
                pending.append(idx)
                continue
            except EvaluationError as exc:
                raise InconsistentSystem(f"{eq}: {exc}") from None
            c = _const(p)
            if c is not None:
                if c != 0:
                    raise InconsistentSystem(f"{eq} reduces to {c} = 0")
                continue
            pending.append(idx)
            deg = _degree(p)
            if deg == 1:
                rows.append((p, frozenset([idx])))
                continue
            root = self._pure_power(p, eq)
            if root is not None:
                sym, value = root
                pin(sym, value, [idx])
        self.pending = tuple(pending)

        for sym, value, sources in _eliminate(rows):
            pin(sym, value, sources)
        return pins

    @staticmethod
    def _pure_power(p: Poly, eq: Eq):
        """Solve ``a*x**n + c = 0`` for its (nonnegative, if n even) root."""
        monos = [m for m in p if m != ONE]
        if len(monos) != 1 or len(monos[0]) != 1:
            return None
        (sym, n), = monos[0]
        rhs = -p.get(ONE, Fraction(0)) / p[monos[0]]
        if n % 2 == 0 and rhs < 0:
            raise InconsistentSystem(f"{eq} needs an even power equal to {rhs}")
        value = rational_root(rhs, n)
        if value is None:
            return None
        return sym, value


def _eliminate(rows) -> Iterable[Tuple[Attr, Fraction, frozenset]]:
    """Gauss-Jordan over exact rationals; yields symbols with a pinned value.

    Pivot columns are taken in symbol order and, within a column, the first
    remaining row (in equation order) with a nonzero coefficient.
    """
    if not rows:
        return []
    work = []
    for p, src in rows:
        coeffs = {m[0][0]: c for m, c in p.items() if m != ONE}
        work.append([coeffs, p.get(ONE, Fraction(0)), src])
    symbols = sorted({s for coeffs, _, _ in work for s in coeffs})
    pivot_rows = []
    remaining = list(range(len(work)))
    for sym in symbols:
        r = next((i for i in remaining if work[i][0].get(sym)), None)
        if r is None:
            continue
        remaining.remove(r)
        coeffs, const, src = work[r]
        inv = 1 / coeffs[sym]
        coeffs = {s: c * inv for s, c in coeffs.items()}
        const *= inv
        work[r] = [coeffs, const, src]
        for i in range(len(work)):
            if i == r:
                continue
            f = work[i][0].get(sym)
            if not f:
                continue
            other = dict(work[i][0])
            for s, c in coeffs.items():
                v = other.get(s, 0) - f * c
                if v:
                    other[s] = v
                else:
                    other.pop(s, None)
            work[i] = [other, work[i][1] - f * const, work[i][2] | src]
        pivot_rows.append((sym, r))
    for i in remaining:
        coeffs, const, _ = work[i]
        if not coeffs and const != 0:
            raise InconsistentSystem(f"linear system implies {const} = 0")
    out = []
    for sym, r in pivot_rows:
        coeffs, const, src = work[r]
        if len(coeffs) == 1:
            out.append((sym, -const, src))
    return out
