from __future__ import annotations

import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isohk.algebra.scalar import (
    QQi,
    Jet,
    exact_sqrt,
    format_decimal,
    is_exact,
    parse_scalar,
    sqrt,
)
from isohk.errors import InvalidInput

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=30)
gaussian = st.builds(QQi, fractions, fractions)


def test_qqi_arithmetic_matches_complex():
    a, b = QQi(Fraction(1, 2), 3), QQi(-2, Fraction(1, 3))
    for got, want in [
        (a + b, complex(a) + complex(b)),
        (a - b, complex(a) - complex(b)),
        (a * b, complex(a) * complex(b)),
        (a / b, complex(a) / complex(b)),
    ]:
        assert isinstance(got, QQi)
        assert abs(complex(got) - want) < 1e-12


def test_qqi_mixed_with_float_degrades():
    out = QQi(1, 1) * 0.5
    assert isinstance(out, complex)
    assert not is_exact(out)


@given(gaussian, gaussian)
def test_qqi_field_axioms(a, b):
    assert a * b == b * a
    if b != 0:
        assert (a / b) * b == a


@given(fractions, fractions)
def test_exact_sqrt_of_squares(r, s):
    z = QQi(r, s)
    root = exact_sqrt(z * z)
    assert root is not None
    assert root * root == z * z
    assert abs(complex(root) - cmath.sqrt(complex(z * z))) < 1e-9


def test_sqrt_degrades_on_non_squares():
    assert sqrt(9) == 3
    assert sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert sqrt(-4) == QQi(0, 2)
    root = sqrt(2)
    assert not is_exact(root)
    assert abs(root - 2**0.5) < 1e-15


def test_jet_product_rule():
    a, b = Jet(Fraction(2), Fraction(3)), Jet(Fraction(5), Fraction(-1))
    out = a * b
    assert out.value == 10
    assert out.tangent == 2 * -1 + 3 * 5


@settings(max_examples=50)
@given(st.floats(0.5, 3.0), st.floats(-2.0, 2.0))
def test_jet_matches_central_differences(x, t):
    def f(z):
        return (z**3 + 2) / (z + 7) + sqrt(z * z + 1)

    jet = f(Jet(complex(x), complex(t)))
    h = 1e-6
    fd = (f(complex(x + h * t)) - f(complex(x - h * t))) / (2 * h)
    assert abs(jet.tangent - fd) <= 1e-6 * max(1.0, abs(fd))


def test_parse_scalar_forms():
    assert parse_scalar("3/4") == (Fraction(3, 4), True)
    assert parse_scalar("-7") == (-7, True)
    value, exact = parse_scalar("1.5e-2")
    assert value == Fraction(15, 1000) and not exact
    assert parse_scalar("2+3i") == (QQi(2, 3), True)
    assert parse_scalar("-i") == (QQi(0, -1), True)
    assert parse_scalar("1/2-5/3i") == (QQi(Fraction(1, 2), Fraction(-5, 3)), True)


@pytest.mark.parametrize("bad", ["", "abc", "1/0", "2++3i"])
def test_parse_scalar_rejects(bad):
    with pytest.raises(InvalidInput):
        parse_scalar(bad)


def test_parse_scalar_requires_strings():
    with pytest.raises(InvalidInput):
        parse_scalar(1.5)


def test_format_decimal_has_fixed_digits():
    assert format_decimal(Fraction(1, 3)) == "3.3333333333333331e-01"
    assert format_decimal(0) == "0.0000000000000000e+00"
    assert format_decimal(QQi(1, -2)).endswith("i")
