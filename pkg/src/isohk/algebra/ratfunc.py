"""Rational functions of x.

A rational function optionally remembers a factorisation of its (monic)
denominator as ``prod (x - r)**k``.  Every potential in the library has its
poles at known coordinates, so arithmetic on factored operands takes
least common multiples of the factorisations instead of multiplying
denominators; this keeps degrees minimal and works for jet or float
coefficients where a polynomial gcd is unavailable.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from ..errors import InvalidInput
from .poly import Polynomial, poly_gcd
from .scalar import Jet, Scalar, div, tangent_part, value_part

Poles = tuple[tuple[Scalar, int], ...]


def _merge_max(a: Poles, b: Poles) -> Poles:
    out = list(a)
    for root, mult in b:
        for k, (r, m) in enumerate(out):
            if r == root:
                out[k] = (r, max(m, mult))
                break
        else:
            out.append((root, mult))
    return tuple((r, m) for r, m in out if m > 0)


def _merge_sum(a: Poles, b: Poles) -> Poles:
    out = list(a)
    for root, mult in b:
        for k, (r, m) in enumerate(out):
            if r == root:
                out[k] = (r, m + mult)
                break
        else:
            out.append((root, mult))
    return tuple((r, m) for r, m in out if m > 0)


def _complement(target: Poles, have: Poles) -> Polynomial:
    """``prod (x - r)**(k_target - k_have)`` over the roots of ``target``."""
    missing = []
    for root, mult in target:
        got = next((m for r, m in have if r == root), 0)
        if mult > got:
            missing.append((root, mult - got))
    return Polynomial.from_roots(missing)


class RationalFunction:
    """Quotient ``num/den`` with an optional denominator factorisation."""

    __slots__ = ("num", "den", "poles")

    def __init__(self, num: Polynomial, den: Polynomial, poles: Poles | None = None) -> None:
        if den.is_zero():
            raise InvalidInput("zero denominator")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "poles", poles)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def from_poles(cls, num: Polynomial, poles: Iterable[tuple[Scalar, int]]) -> RationalFunction:
        poles = tuple((r, m) for r, m in poles if m > 0)
        return cls(num, Polynomial.from_roots(poles), poles)

    @classmethod
    def polynomial(cls, p: Polynomial | Sequence[Scalar]) -> RationalFunction:
        if not isinstance(p, Polynomial):
            p = Polynomial(p)
        return cls(p, Polynomial((1,)), ())

    @classmethod
    def constant(cls, c: Scalar) -> RationalFunction:
        return cls.polynomial(Polynomial.constant(c))

    @classmethod
    def simple_pole(cls, coeff: Scalar, root: Scalar, order: int = 1) -> RationalFunction:
        """``coeff / (x - root)**order``."""
        return cls.from_poles(Polynomial.constant(coeff), ((root, order),))

    def is_exact(self) -> bool:
        return self.num.is_exact() and self.den.is_exact()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _tidy(self) -> RationalFunction:
        return self.normalized() if self.is_exact() else self

    def normalized(self) -> RationalFunction:
        """Cancel common factors (exact only) and make the denominator monic."""
        if self.num.is_zero():
            return RationalFunction(self.num, Polynomial((1,)), ())
        if self.poles is not None and self.is_exact():
            num, poles = self.num, []
            for root, mult in self.poles:
                while mult and num(root) == 0:
                    num, _ = num.divide_linear(root)
                    mult -= 1
                if mult:
                    poles.append((root, mult))
            return RationalFunction.from_poles(num, poles)
        if self.is_exact():
            g = poly_gcd(self.num, self.den)
            num, _ = self.num.divmod(g)
            den, _ = self.den.divmod(g)
        else:
            num, den = self.num, self.den
        lead = den.lc
        if lead != 1:
            num, den = num / lead, den / lead
        return RationalFunction(num, den, self.poles if den == self.den else None)

    def __add__(self, other: object) -> RationalFunction:
        other = _coerce(other)
        if self.poles is not None and other.poles is not None:
            poles = _merge_max(self.poles, other.poles)
            num = self.num * _complement(poles, self.poles) + other.num * _complement(poles, other.poles)
            return RationalFunction(num, Polynomial.from_roots(poles), poles)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)._tidy()
        num = self.num * other.den + other.num * self.den
        return RationalFunction(num, self.den * other.den)._tidy()

    __radd__ = __add__

    def __neg__(self) -> RationalFunction:
        return RationalFunction(-self.num, self.den, self.poles)

    def __sub__(self, other: object) -> RationalFunction:
        return self + (-_coerce(other))

    def __rsub__(self, other: object) -> RationalFunction:
        return _coerce(other) + (-self)

    def __mul__(self, other: object) -> RationalFunction:
        if not isinstance(other, (RationalFunction, Polynomial)):
            return RationalFunction(self.num * other, self.den, self.poles)
        other = _coerce(other)
        num = self.num * other.num
        if self.poles is not None and other.poles is not None:
            poles = _merge_sum(self.poles, other.poles)
            return RationalFunction(num, Polynomial.from_roots(poles), poles)
        return RationalFunction(num, self.den * other.den)._tidy()

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> RationalFunction:
        if isinstance(other, (RationalFunction, Polynomial)):
            other = _coerce(other)
            if other.num.degree == 0 and other.poles is not None:
                inv = RationalFunction(other.den / other.num.lc, Polynomial((1,)), ())
                return self * inv
            return RationalFunction(self.num * other.den, self.den * other.num)._tidy()
        return RationalFunction(self.num / other, self.den, self.poles)

    def __pow__(self, k: int) -> RationalFunction:
        if k < 0:
            raise InvalidInput("negative power of a rational function")
        result = RationalFunction.constant(1)
        for _ in range(k):
            result = result * self
        return result

    def __call__(self, x: Scalar) -> Scalar:
        d = self.den(x)
        if d == 0:
            raise InvalidInput("evaluation at a pole")
        return div(self.num(x), d)

    def __eq__(self, other: object) -> bool:
        """Equality as functions (cross-multiplication)."""
        other = _coerce(other)
        return self.num * other.den == other.num * self.den

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"RationalFunction({list(self.num.coeffs)!r} / {list(self.den.coeffs)!r})"

    def derivative(self) -> RationalFunction:
        """d/dx; factored operands keep a tight denominator."""
        if self.poles is not None:
            base = Polynomial.from_roots((r, 1) for r, _ in self.poles)
            acc = Polynomial()
            for j, (root, mult) in enumerate(self.poles):
                others = Polynomial.from_roots((r, 1) for k, (r, _) in enumerate(self.poles) if k != j)
                acc = acc + others * mult
            num = self.num.derivative() * base - self.num * acc
            poles = tuple((r, m + 1) for r, m in self.poles)
            return RationalFunction(num, Polynomial.from_roots(poles), poles)
        num = self.num.derivative() * self.den - self.num * self.den.derivative()
        return RationalFunction(num, self.den * self.den)._tidy()

    def map_coeffs(self, fn) -> RationalFunction:
        poles = None if self.poles is None else tuple((fn(r), m) for r, m in self.poles)
        return RationalFunction(self.num.map(fn), self.den.map(fn), poles)

    def value_part(self) -> RationalFunction:
        return self.map_coeffs(value_part)

    def tangent_part(self) -> RationalFunction:
        """Directional derivative of a rational function with jet coefficients.

        For ``N/prod (x - r)**k`` the derivative of the denominator is
        expanded through the roots, so the result has denominator
        ``prod (x - r0)**(k+1)`` with ``r0`` the value parts of the roots.
        """
        if self.poles is None:
            n0, n1 = self.num.value_part(), self.num.tangent_part()
            d0, d1 = self.den.value_part(), self.den.tangent_part()
            return RationalFunction(n1 * d0 - n0 * d1, d0 * d0)._tidy()
        roots0 = [(value_part(r), m) for r, m in self.poles]
        n0, n1 = self.num.value_part(), self.num.tangent_part()
        base = Polynomial.from_roots((r, 1) for r, _ in roots0)
        acc = Polynomial()
        for j, (root, mult) in enumerate(self.poles):
            dr = tangent_part(root)
            if dr == 0:
                continue
            others = Polynomial.from_roots((r, 1) for k, (r, _) in enumerate(roots0) if k != j)
            acc = acc + others * (mult * dr)
        num = n1 * base + n0 * acc
        poles = tuple((r, m + 1) for r, m in roots0)
        return RationalFunction(num, Polynomial.from_roots(poles), poles)

    def max_abs(self) -> float:
        return self.num.max_abs()


def _coerce(obj: object) -> RationalFunction:
    if isinstance(obj, RationalFunction):
        return obj
    if isinstance(obj, Polynomial):
        return RationalFunction.polynomial(obj)
    return RationalFunction.constant(obj)


def rf_normalize(num: Polynomial, den: Polynomial) -> RationalFunction:
    """Normalised quotient: gcd 1 and monic denominator in Exact mode."""
    if den.is_zero():
        raise InvalidInput("zero denominator")
    return RationalFunction(num, den).normalized()


def rf_derivative(f: RationalFunction) -> RationalFunction:
    d = f.derivative()
    return d.normalized() if d.is_exact() else d


def jet_lift(values: Sequence[Scalar], direction: Sequence[Scalar]) -> list[Jet]:
    """Attach a tangent direction to a coordinate vector."""
    if len(values) != len(direction):
        raise InvalidInput("direction length does not match coordinates")
    return [Jet(v, d) for v, d in zip(values, direction)]


def common_numerators(fs: Sequence[RationalFunction]) -> tuple[Poles, list[Polynomial]]:
    """Write factored rational functions over their least common denominator."""
    poles: Poles = ()
    for f in fs:
        if f.poles is None:
            raise InvalidInput("common denominators need factored rational functions")
        poles = _merge_max(poles, f.poles)
    return poles, [f.num * _complement(poles, f.poles) for f in fs]
