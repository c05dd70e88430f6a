import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from georeason.algebra import (EquationStore, InconsistentSystem, equation_key,
                               rational_root, to_poly)
from georeason.lang import Attr, Eq, Num, Op, parse_equation

X = Attr("LengthOfLine", ("A", "B"))
Y = Attr("LengthOfLine", ("B", "C"))
Z = Attr("LengthOfLine", ("A", "C"))

SUM_DIFF = ["Equal(Add(LengthOfLine(A,B),LengthOfLine(B,C)),180)",
            "Equal(Sub(LengthOfLine(A,B),LengthOfLine(B,C)),40)"]
PYTHAGORAS = ["Equal(Pow(LengthOfLine(A,C),2),Add(Pow(LengthOfLine(A,B),2),"
              "Pow(LengthOfLine(B,C),2)))",
              "Equal(LengthOfLine(A,B),3)", "Equal(LengthOfLine(B,C),4)"]


def solved(sources):
    store = EquationStore()
    for s in sources:
        store.add_equation(parse_equation(s) if isinstance(s, str) else s)
    store.solve()
    return store


def test_sum_and_difference():
    d = solved(SUM_DIFF).determined
    assert d == {X: Fraction(110), Y: Fraction(70)}
    assert all(type(v) is Fraction for v in d.values())


def test_pythagorean_triple():
    assert solved(PYTHAGORAS).determined[Z] == 5


@pytest.mark.parametrize("fixture", [SUM_DIFF, PYTHAGORAS])
def test_insertion_order_does_not_matter(fixture):
    rng = random.Random(11)
    reference = solved(fixture).determined
    for _ in range(20):
        order = fixture[:]
        rng.shuffle(order)
        assert solved(order).determined == reference


def test_even_power_takes_nonnegative_root():
    store = solved(["Equal(Pow(LengthOfLine(A,B),2),49/4)"])
    assert store.determined[X] == Fraction(7, 2)


def test_irrational_root_stays_undetermined():
    store = solved(["Equal(Pow(LengthOfLine(A,B),2),2)"])
    assert X not in store.determined


def test_contradiction_raises():
    with pytest.raises(InconsistentSystem):
        solved(["Equal(LengthOfLine(A,B),1)", "Equal(LengthOfLine(A,B),2)"])


def test_support_forms():
    store = solved(SUM_DIFF)
    eq = parse_equation(SUM_DIFF[0])
    assert store.support(eq)[0] == "equation"
    derived = parse_equation("Equal(Mul(2,LengthOfLine(B,C)),140)")
    kind, syms = store.support(derived)
    assert kind == "values" and syms == (Y,)
    assert store.support(parse_equation("Equal(LengthOfLine(A,C),1)")) is None


def test_equation_key_normalises_scale_and_sides():
    a = parse_equation("Equal(Add(LengthOfLine(A,B),LengthOfLine(B,C)),10)")
    b = parse_equation("Equal(20,Mul(2,Add(LengthOfLine(B,C),LengthOfLine(A,B))))")
    assert equation_key(a) == equation_key(b)
    assert equation_key(parse_equation("Equal(LengthOfLine(A,B),LengthOfLine(A,B))")) is None


def test_provenance_points_at_source_equations():
    store = solved(SUM_DIFF)
    sources, subs = store.provenance[X]
    assert set(sources) == {0, 1} and subs == ()


@pytest.mark.parametrize("value,n,root", [
    (Fraction(27, 8), 3, Fraction(3, 2)), (Fraction(-8), 3, Fraction(-2)),
    (Fraction(2), 2, None), (Fraction(-4), 2, None), (Fraction(0), 2, Fraction(0)),
])
def test_rational_root(value, n, root):
    assert rational_root(value, n) == root


def test_to_poly_rejects_symbolic_division():
    from georeason.algebra import NotPolynomial
    with pytest.raises(NotPolynomial):
        to_poly(Op("Div", (Num(Fraction(1)), X)))


SYMS = [Attr("LengthOfLine", (a, b)) for a, b in ["AB", "AC", "AD", "BC"]]


@st.composite
def linear_systems(draw):
    n = draw(st.integers(2, 4))
    coeffs = draw(st.lists(st.lists(st.integers(-5, 5), min_size=n, max_size=n),
                           min_size=n, max_size=n))
    assume(abs(np.linalg.det(np.array(coeffs, dtype=float))) > 0.5)
    solution = draw(st.lists(st.fractions(-50, 50, max_denominator=7), min_size=n, max_size=n))
    return coeffs, solution


@settings(max_examples=150, deadline=None)
@given(linear_systems(), st.randoms(use_true_random=False))
def test_random_square_systems_solve_exactly(system, rnd):
    coeffs, solution = system
    n = len(solution)
    eqs = []
    for row in coeffs:
        terms = [Op("Mul", (Num(Fraction(c)), SYMS[i])) for i, c in enumerate(row) if c]
        assume(terms)
        lhs = terms[0] if len(terms) == 1 else Op("Add", tuple(terms))
        rhs = sum((Fraction(c) * solution[i] for i, c in enumerate(row)), Fraction(0))
        eqs.append(Eq(lhs, Num(rhs)))
    rnd.shuffle(eqs)
    store = solved(eqs)
    for i in range(n):
        if any(row[i] for row in coeffs):
            assert store.determined[SYMS[i]] == solution[i]
