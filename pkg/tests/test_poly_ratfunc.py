from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from isohk.algebra.poly import Polynomial, poly_gcd
from isohk.algebra.ratfunc import RationalFunction, rf_derivative, rf_normalize
from isohk.errors import InvalidInput

X = Polynomial((0, 1))
ints = st.integers(-9, 9)
polys = st.lists(ints, min_size=1, max_size=5).map(Polynomial)

x = sympy.Symbol("x")


def to_sympy(p: Polynomial):
    return sum(sympy.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(map(Fraction, p.coeffs)))


def rf_to_sympy(f: RationalFunction):
    return to_sympy(f.num) / to_sympy(f.den)


def test_normalize_cancels_common_factor():
    f = rf_normalize(X * X - 1, X - 1)
    assert f.num == X + 1
    assert f.den == Polynomial((1,))


def test_normalize_makes_denominator_monic():
    f = rf_normalize(X * 2, X * X * 4)
    assert f.num == Polynomial((Fraction(1, 2),))
    assert f.den == X


def test_normalize_leaves_normal_form():
    p = X**3 + 1
    f = rf_normalize(p, Polynomial((1,)))
    assert f.num == p and f.den == Polynomial((1,))


def test_zero_denominator_rejected():
    with pytest.raises(InvalidInput):
        rf_normalize(X, Polynomial())


def test_derivative_examples():
    assert rf_derivative(RationalFunction.polynomial(X**3 + 1)) == RationalFunction.polynomial(X * X * 3)
    inv = RationalFunction.simple_pole(1, 0)
    assert rf_derivative(inv) == RationalFunction.simple_pole(-1, 0, 2)
    f = RationalFunction.simple_pole(3, 2)
    assert rf_derivative(f) == RationalFunction.simple_pole(-3, 2, 2)


@given(polys, polys)
def test_polynomial_ring_ops_match_sympy(a, b):
    assert sympy.expand(to_sympy(a * b) - to_sympy(a) * to_sympy(b)) == 0
    assert sympy.expand(to_sympy(a + b) - to_sympy(a) - to_sympy(b)) == 0


@given(polys, polys.filter(lambda p: not p.is_zero()))
def test_divmod_identity(a, b):
    q, r = a.divmod(b)
    assert q * b + r == a
    assert r.is_zero() or r.degree < b.degree


@settings(max_examples=40)
@given(polys, polys)
def test_gcd_matches_sympy(a, b):
    if a.is_zero() and b.is_zero():
        return
    g = poly_gcd(a, b)
    want = sympy.Poly(sympy.gcd(to_sympy(a), to_sympy(b)), x).monic()
    assert sympy.Poly(to_sympy(g), x).monic() == want


@settings(max_examples=40)
@given(polys, polys.filter(lambda p: not p.is_zero()), st.fractions(-3, 3, max_denominator=5))
def test_rational_derivative_matches_sympy(a, b, c):
    f = rf_normalize(a, b)
    df = rf_derivative(f)
    assert sympy.simplify(rf_to_sympy(df) - sympy.diff(rf_to_sympy(f), x)) == 0
    if f.den(c) != 0:
        want = rf_to_sympy(f).subs(x, sympy.Rational(c.numerator, c.denominator))
        assert sympy.Rational(f(c).numerator, f(c).denominator) == want


def test_taylor_shift_and_divide_linear():
    p = X**3 + 1
    shifted = p.taylor_shift(2)
    assert shifted.coeffs == (9, 12, 6, 1)
    q, rem = p.divide_linear(-1)
    assert rem == 0 and q * (X + 1) == p


def test_from_poles_and_evaluation():
    f = RationalFunction.from_poles(Polynomial((1,)), ((2, 2), (Fraction(1, 3), 1)))
    assert f(3) == Fraction(1, 1 * (3 - Fraction(1, 3)))
    assert f.normalized() == f
