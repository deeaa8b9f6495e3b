"""Dense univariate polynomials over any scalar kind (lowest degree first)."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..errors import InvalidInput
from .scalar import Scalar, div, is_exact, tangent_part, value_part


def _strip(coeffs: Sequence[Scalar]) -> tuple[Scalar, ...]:
    n = len(coeffs)
    while n and coeffs[n - 1] == 0:
        n -= 1
    return tuple(coeffs[:n])


class Polynomial:
    """Immutable polynomial; the zero polynomial has no coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()) -> None:
        object.__setattr__(self, "coeffs", _strip(list(coeffs)))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def constant(cls, c: Scalar) -> Polynomial:
        return cls((c,))

    @classmethod
    def monomial(cls, degree: int, c: Scalar = 1) -> Polynomial:
        return cls([0] * degree + [c])

    @classmethod
    def linear_factor(cls, root: Scalar) -> Polynomial:
        """The monic polynomial ``x - root``."""
        return cls((-root, 1))

    @classmethod
    def from_roots(cls, roots: Iterable[tuple[Scalar, int]]) -> Polynomial:
        """``prod (x - r)**k`` over ``(r, k)`` pairs."""
        result = cls((1,))
        for root, mult in roots:
            factor = cls.linear_factor(root)
            for _ in range(mult):
                result = result * factor
        return result

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self) -> Scalar:
        if not self.coeffs:
            raise InvalidInput("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def coeff(self, k: int) -> Scalar:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    def __add__(self, other: object) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(-c for c in self.coeffs)

    def __sub__(self, other: object) -> Polynomial:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other: object) -> Polynomial:
        return (-self) + other

    def __mul__(self, other: object) -> Polynomial:
        if not isinstance(other, Polynomial):
            return Polynomial(c * other for c in self.coeffs)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Polynomial()
        out: list[Scalar] = [0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            for j, cb in enumerate(b):
                out[i + j] = out[i + j] + ca * cb
        return Polynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Scalar) -> Polynomial:
        if isinstance(scalar, Polynomial):
            raise InvalidInput("use divmod for polynomial division")
        return Polynomial(div(c, scalar) for c in self.coeffs)

    def __pow__(self, k: int) -> Polynomial:
        if k < 0:
            raise InvalidInput("negative polynomial power")
        result = Polynomial((1,))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __call__(self, x: Scalar) -> Scalar:
        acc: Scalar = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)!r})"

    def derivative(self) -> Polynomial:
        return Polynomial(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def divmod(self, other: Polynomial) -> tuple[Polynomial, Polynomial]:
        """Euclidean division; the divisor's leading coefficient must be invertible."""
        if other.is_zero():
            raise InvalidInput("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        lead = other.lc
        if len(rem) <= dq:
            return Polynomial(), self
        quot: list[Scalar] = [0] * (len(rem) - dq)
        for k in range(len(rem) - 1, dq - 1, -1):
            c = div(rem[k], lead)
            quot[k - dq] = c
            if c == 0:
                continue
            for j, b in enumerate(other.coeffs):
                rem[k - dq + j] = rem[k - dq + j] - c * b
        return Polynomial(quot), Polynomial(rem[:dq])

    def monic(self) -> Polynomial:
        return self / self.lc

    def divide_linear(self, root: Scalar) -> tuple[Polynomial, Scalar]:
        """Synthetic division by ``x - root``: returns (quotient, remainder)."""
        if not self.coeffs:
            return Polynomial(), 0
        out: list[Scalar] = []
        acc: Scalar = 0
        for c in reversed(self.coeffs):
            acc = acc * root + c
            out.append(acc)
        remainder = out.pop()
        return Polynomial(reversed(out)), remainder

    def taylor_shift(self, c: Scalar) -> Polynomial:
        """Coefficients of ``t -> self(c + t)`` (repeated synthetic division)."""
        coeffs = list(self.coeffs)
        n = len(coeffs)
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                coeffs[k] = coeffs[k] + c * coeffs[k + 1]
        return Polynomial(coeffs)

    def map(self, fn) -> Polynomial:
        return Polynomial(fn(c) for c in self.coeffs)

    def value_part(self) -> Polynomial:
        return self.map(value_part)

    def tangent_part(self) -> Polynomial:
        return self.map(tangent_part)

    def max_abs(self) -> float:
        return max((float(abs(value_part(c))) for c in self.coeffs), default=0.0)


X = Polynomial((0, 1))


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic gcd by the Euclidean algorithm (exact coefficients only)."""
    if not (a.is_exact() and b.is_exact()):
        raise InvalidInput("gcd is only defined for exact coefficients")
    while not b.is_zero():
        _, r = a.divmod(b)
        a, b = b, r
    if a.is_zero():
        return a
    return a.monic()
