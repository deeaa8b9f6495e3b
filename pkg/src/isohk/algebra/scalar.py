"""Scalars: exact (Gaussian) rationals, complex floats and first-order jets.

Exact values are ``int``, ``fractions.Fraction`` or :class:`QQi` (a Gaussian
rational).  Float values are Python ``complex``/``float`` or, in extended
precision, ``mpmath.mpc``.  Mixing an exact value with a float one yields a
float, so a computation that meets an irrational square root degrades to
Float mode on its own; :func:`is_exact` tells which mode a result is in.
"""

from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from typing import Any, Union

import mpmath

from ..errors import InvalidInput

Scalar = Any
_MP_TYPES = (mpmath.mpc, mpmath.mpf)
EXACT = "exact"
FLOAT = "float"


class QQi:
    """Gaussian rational ``re + i*im`` with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: int | Fraction = 0, im: int | Fraction = 0) -> None:
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("QQi is immutable")

    @staticmethod
    def _lift(other: object) -> QQi | None:
        if isinstance(other, QQi):
            return other
        if isinstance(other, (int, Fraction)):
            return QQi(other, 0)
        return None

    def __add__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return QQi(self.re + o.re, self.im + o.im)
        if isinstance(other, (complex, float)):
            return complex(self) + other
        if isinstance(other, _MP_TYPES):
            return to_extended(self) + other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return QQi(self.re - o.re, self.im - o.im)
        if isinstance(other, (complex, float)):
            return complex(self) - other
        if isinstance(other, _MP_TYPES):
            return to_extended(self) - other
        return NotImplemented

    def __rsub__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return QQi(o.re - self.re, o.im - self.im)
        if isinstance(other, (complex, float)):
            return other - complex(self)
        if isinstance(other, _MP_TYPES):
            return other - to_extended(self)
        return NotImplemented

    def __mul__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
        if isinstance(other, (complex, float)):
            return complex(self) * other
        if isinstance(other, _MP_TYPES):
            return to_extended(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return self * o._inverse()
        if isinstance(other, (complex, float)):
            return complex(self) / other
        if isinstance(other, _MP_TYPES):
            return to_extended(self) / other
        return NotImplemented

    def __rtruediv__(self, other: object) -> Any:
        o = QQi._lift(other)
        if o is not None:
            return o * self._inverse()
        if isinstance(other, (complex, float)):
            return other / complex(self)
        if isinstance(other, _MP_TYPES):
            return other / to_extended(self)
        return NotImplemented

    def _inverse(self) -> QQi:
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("QQi division by zero")
        return QQi(self.re / norm, -self.im / norm)

    def __pow__(self, k: int) -> QQi:
        if not isinstance(k, int):
            return NotImplemented
        base = self if k >= 0 else self._inverse()
        result = QQi(1)
        for _ in range(abs(k)):
            result = result * base
        return result

    def __neg__(self) -> QQi:
        return QQi(-self.re, -self.im)

    def __pos__(self) -> QQi:
        return self

    def __abs__(self) -> float:
        return abs(complex(self))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other: object) -> bool:
        o = QQi._lift(other)
        if o is not None:
            return self.re == o.re and self.im == o.im
        if isinstance(other, (complex, float)):
            return complex(self) == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> QQi:
        return QQi(self.re, -self.im)

    def __repr__(self) -> str:
        return f"QQi({self.re}, {self.im})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


I = QQi(0, 1)


class Jet:
    """First-order jet ``value + eps*tangent`` with ``eps**2 = 0``."""

    __slots__ = ("value", "tangent")

    def __init__(self, value: Scalar, tangent: Scalar = 0) -> None:
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "tangent", tangent)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Jet is immutable")

    def __add__(self, other: object) -> Jet:
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.tangent + other.tangent)
        return Jet(self.value + other, self.tangent)

    __radd__ = __add__

    def __sub__(self, other: object) -> Jet:
        if isinstance(other, Jet):
            return Jet(self.value - other.value, self.tangent - other.tangent)
        return Jet(self.value - other, self.tangent)

    def __rsub__(self, other: object) -> Jet:
        return Jet(other - self.value, -self.tangent)

    def __mul__(self, other: object) -> Jet:
        if isinstance(other, Jet):
            return Jet(
                self.value * other.value,
                self.value * other.tangent + self.tangent * other.value,
            )
        return Jet(self.value * other, self.tangent * other)

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> Jet:
        if isinstance(other, Jet):
            if other.value == 0:
                raise ZeroDivisionError("jet division by a pure infinitesimal")
            quotient = div(self.value, other.value)
            return Jet(quotient, div(self.tangent - quotient * other.tangent, other.value))
        return Jet(div(self.value, other), div(self.tangent, other))

    def __rtruediv__(self, other: object) -> Jet:
        if self.value == 0:
            raise ZeroDivisionError("jet division by a pure infinitesimal")
        quotient = div(other, self.value)
        return Jet(quotient, div(-quotient * self.tangent, self.value))

    def __pow__(self, k: int) -> Jet:
        if not isinstance(k, int):
            return NotImplemented
        if k == 0:
            return Jet(self.value**0, self.tangent * 0)
        if k < 0:
            return 1 / (self ** (-k))
        return Jet(self.value**k, k * self.value ** (k - 1) * self.tangent)

    def __neg__(self) -> Jet:
        return Jet(-self.value, -self.tangent)

    def __pos__(self) -> Jet:
        return self

    def __bool__(self) -> bool:
        return bool(self.value) or bool(self.tangent)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Jet):
            return self.value == other.value and self.tangent == other.tangent
        return self.value == other and self.tangent == 0

    def __hash__(self) -> int:
        return hash((self.value, self.tangent))

    def __abs__(self) -> float:
        return abs(self.value)

    def __repr__(self) -> str:
        return f"Jet({self.value!r}, {self.tangent!r})"


def is_exact(x: Scalar) -> bool:
    """True for int, Fraction, QQi and jets whose parts are exact."""
    if isinstance(x, (int, Fraction, QQi)):
        return True
    if isinstance(x, Jet):
        return is_exact(x.value) and is_exact(x.tangent)
    return False


def all_exact(values: Any) -> bool:
    return all(is_exact(v) for v in values)


def value_part(x: Scalar) -> Scalar:
    return x.value if isinstance(x, Jet) else x


def tangent_part(x: Scalar) -> Scalar:
    return x.tangent if isinstance(x, Jet) else 0


def to_complex(x: Scalar) -> complex:
    if isinstance(x, Jet):
        raise InvalidInput("cannot convert a jet to a complex number")
    return complex(x)


def to_float(x: Scalar) -> Scalar:
    """Convert to Float mode (``complex``), componentwise on jets."""
    if isinstance(x, Jet):
        return Jet(to_float(x.value), to_float(x.tangent))
    if isinstance(x, (mpmath.mpc, mpmath.mpf)):
        return x
    return complex(x)


def to_extended(x: Scalar) -> Scalar:
    """Convert to an mpmath complex at the current mpmath precision."""
    if isinstance(x, Jet):
        return Jet(to_extended(x.value), to_extended(x.tangent))
    if isinstance(x, QQi):
        return mpmath.mpc(mpmath.mpf(x.re.numerator) / x.re.denominator,
                          mpmath.mpf(x.im.numerator) / x.im.denominator)
    if isinstance(x, Fraction):
        return mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
    return mpmath.mpc(x)


def magnitude(x: Scalar) -> float:
    """Absolute value as a Python float (jets: value part)."""
    return float(abs(value_part(x)))


def _rational_sqrt(r: Fraction) -> Fraction | None:
    if r < 0:
        return None
    num, den = r.numerator, r.denominator
    sn, sd = math.isqrt(num), math.isqrt(den)
    if sn * sn == num and sd * sd == den:
        return Fraction(sn, sd)
    return None


def exact_sqrt(x: int | Fraction | QQi) -> Fraction | QQi | None:
    """Principal square root when it is a (Gaussian) rational, else None.

    The principal root has positive real part, or positive imaginary part
    when the real part vanishes, matching ``cmath.sqrt``.
    """
    if isinstance(x, (int, Fraction)):
        r = Fraction(x)
        if r >= 0:
            return _rational_sqrt(r)
        root = _rational_sqrt(-r)
        return None if root is None else QQi(0, root)
    if isinstance(x, QQi):
        if x.im == 0:
            return exact_sqrt(x.re)
        modulus = _rational_sqrt(x.re * x.re + x.im * x.im)
        if modulus is None:
            return None
        real = _rational_sqrt((x.re + modulus) / 2)
        if real is None or real == 0:
            return None
        return QQi(real, x.im / (2 * real))
    raise InvalidInput(f"not an exact scalar: {x!r}")


def sqrt(x: Scalar) -> Scalar:
    """Principal square root.

    Exact inputs that are not perfect squares return a Float value, which
    degrades every downstream computation to Float mode.
    """
    if isinstance(x, Jet):
        root = sqrt(x.value)
        if root == 0:
            raise ZeroDivisionError("square root of a jet with zero value")
        return Jet(root, div(x.tangent, 2 * root))
    if isinstance(x, (int, Fraction, QQi)):
        root = exact_sqrt(x)
        if root is not None:
            return root
        return cmath.sqrt(complex(x))
    if isinstance(x, (mpmath.mpc, mpmath.mpf)):
        return mpmath.sqrt(x)
    return cmath.sqrt(x)


_NUMBER = r"[0-9]+(?:/[0-9]+|\.[0-9]*(?:[eE][+-]?[0-9]+)?|[eE][+-]?[0-9]+)?|\.[0-9]+(?:[eE][+-]?[0-9]+)?"
_COMPLEX_RE = re.compile(
    rf"^\s*(?P<re>[+-]?(?:{_NUMBER}))?\s*(?:(?P<isign>[+-])?\s*(?P<im>{_NUMBER})?\s*(?P<i>[ij]))?\s*$"
)


def _parse_real(text: str) -> tuple[Fraction | float, bool]:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise InvalidInput(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den)), True
    if "." in text or "e" in text.lower():
        return Fraction(text), False
    return Fraction(int(text)), True


def parse_scalar(text: str) -> tuple[Scalar, bool]:
    """Parse ``"3/4"``, ``"1.5e-2"``, ``"2+3i"``, ``"-i"``.

    Returns the value and whether it was written as an exact rational.
    Decimal strings are parsed to the exact binary-free Fraction they denote
    but flagged inexact, so ``auto`` mode can decide on Float.
    """
    if not isinstance(text, str):
        raise InvalidInput(f"numbers must be given as strings, got {text!r}")
    match = _COMPLEX_RE.match(text)
    if not match or not text.strip():
        raise InvalidInput(f"cannot parse number {text!r}")
    re_text, isign, im_text, has_i = match.group("re", "isign", "im", "i")
    if has_i is None:
        if re_text is None:
            raise InvalidInput(f"cannot parse number {text!r}")
        value, exact = _parse_real(re_text)
        return value, exact
    if re_text is not None and isign is None and im_text is None:
        # "3i" or "-2/3i": the whole leading token is the imaginary part
        imag, exact = _parse_real(re_text.lstrip("+-"))
        if re_text.startswith("-"):
            imag = -imag
        return QQi(0, imag), exact
    real, exact_re = (Fraction(0), True) if re_text is None else _parse_real(re_text)
    imag, exact_im = (Fraction(1), True) if im_text is None else _parse_real(im_text)
    if isign == "-":
        imag = -imag
    return QQi(real, imag), exact_re and exact_im


def format_decimal(x: Scalar, digits: int = 17) -> str:
    """Deterministic decimal rendering with ``digits`` significant digits."""
    x = value_part(x)
    if isinstance(x, (mpmath.mpc, mpmath.mpf)):
        x = complex(x)
    if isinstance(x, (int, Fraction)):
        return f"{float(x):.{digits - 1}e}"
    z = complex(x)
    if z.imag == 0:
        return f"{z.real:.{digits - 1}e}"
    return f"{z.real:.{digits - 1}e}{'+' if z.imag >= 0 else '-'}{abs(z.imag):.{digits - 1}e}i"


def as_scalar(value: Union[int, Fraction, QQi, complex, float, str]) -> Scalar:
    """Accept strings through :func:`parse_scalar`; pass numbers through."""
    if isinstance(value, str):
        return parse_scalar(value)[0]
    return value


def div(a: Scalar, b: Scalar) -> Scalar:
    """``a / b`` that keeps two ints exact."""
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b
