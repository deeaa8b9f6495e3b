"""Truncated Laurent/Puiseux series in a local parameter ``s``.

A site is a finite point ``c`` or infinity together with a ramification
``r``; the local parameter satisfies ``x = c + s**r`` or ``x = s**(-r)``.
A :class:`LocalSeries` stores the coefficients of ``s**valuation`` up to
``s**order`` inclusive; everything beyond ``order`` is unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..errors import InvalidInput, OddValuation, ResidueObstruction
from .poly import Polynomial
from .ratfunc import RationalFunction
from .scalar import Scalar, div, is_exact, magnitude, sqrt, to_float


class _Infinity:
    _instance = None

    def __new__(cls) -> _Infinity:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = _Infinity()


@dataclass(frozen=True)
class ExpansionSite:
    location: object
    ramification: int = 1

    def __post_init__(self) -> None:
        if self.ramification not in (1, 2):
            raise InvalidInput("ramification must be 1 or 2")

    @property
    def at_infinity(self) -> bool:
        return self.location is INFINITY

    def x_of_s(self, s: Scalar) -> Scalar:
        if self.at_infinity:
            return s ** (-self.ramification)
        return self.location + s**self.ramification

    def dx_ds(self, s: Scalar) -> Scalar:
        r = self.ramification
        if self.at_infinity:
            return -r * s ** (-r - 1)
        return r * s ** (r - 1)


class LocalSeries:
    """``sum_k coeffs[k] * s**(valuation + k) + O(s**(order + 1))``."""

    __slots__ = ("site", "valuation", "coeffs", "order")

    def __init__(self, site: ExpansionSite, valuation: int, coeffs: Sequence[Scalar], order: int) -> None:
        coeffs = list(coeffs[: max(order - valuation + 1, 0)])
        lead = 0
        while lead < len(coeffs) and coeffs[lead] == 0:
            lead += 1
        coeffs = coeffs[lead:]
        valuation += lead
        if not coeffs:
            valuation = order + 1
        object.__setattr__(self, "site", site)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "order", order)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("LocalSeries is immutable")

    def __repr__(self) -> str:
        return f"LocalSeries(v={self.valuation}, order={self.order}, coeffs={list(self.coeffs)!r})"

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    @property
    def leading(self) -> Scalar:
        if not self.coeffs:
            raise InvalidInput("zero series has no leading coefficient")
        return self.coeffs[0]

    def coefficient(self, k: int) -> Scalar:
        if k > self.order:
            raise InvalidInput(f"coefficient s^{k} beyond truncation order {self.order}")
        idx = k - self.valuation
        return self.coeffs[idx] if 0 <= idx < len(self.coeffs) else 0

    def truncate(self, order: int) -> LocalSeries:
        return LocalSeries(self.site, self.valuation, self.coeffs, min(order, self.order))

    def _check_site(self, other: LocalSeries) -> None:
        if other.site != self.site:
            raise InvalidInput("series live at different sites")

    def __add__(self, other: object) -> LocalSeries:
        if not isinstance(other, LocalSeries):
            other = LocalSeries(self.site, 0, [other], self.order)
        self._check_site(other)
        order = min(self.order, other.order)
        v = min(self.valuation, other.valuation)
        out: list[Scalar] = [0] * max(order - v + 1, 0)
        for src in (self, other):
            for k, c in enumerate(src.coeffs):
                idx = src.valuation + k - v
                if idx < len(out):
                    out[idx] = out[idx] + c
        return LocalSeries(self.site, v, out, order)

    __radd__ = __add__

    def __neg__(self) -> LocalSeries:
        return LocalSeries(self.site, self.valuation, [-c for c in self.coeffs], self.order)

    def __sub__(self, other: object) -> LocalSeries:
        return self + (-other)

    def __rsub__(self, other: object) -> LocalSeries:
        return (-self) + other

    def __mul__(self, other: object) -> LocalSeries:
        if not isinstance(other, LocalSeries):
            return LocalSeries(self.site, self.valuation, [c * other for c in self.coeffs], self.order)
        self._check_site(other)
        order = min(self.order + other.valuation, other.order + self.valuation)
        v = self.valuation + other.valuation
        n = max(order - v + 1, 0)
        out: list[Scalar] = [0] * n
        for i, a in enumerate(self.coeffs[:n]):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs[: n - i]):
                out[i + j] = out[i + j] + a * b
        return LocalSeries(self.site, v, out, order)

    __rmul__ = __mul__

    def shift(self, k: int) -> LocalSeries:
        """Multiply by ``s**k``."""
        return LocalSeries(self.site, self.valuation + k, self.coeffs, self.order + k)

    def inverse(self) -> LocalSeries:
        if self.is_zero():
            raise InvalidInput("inverse of a series that vanishes to its truncation order")
        rel = self.order - self.valuation
        a = self.coeffs
        inv0 = div(1, a[0])
        out = [inv0]
        for k in range(1, rel + 1):
            acc: Scalar = 0
            for j in range(1, min(k, len(a) - 1) + 1):
                acc = acc + a[j] * out[k - j]
            out.append(-acc * inv0)
        return LocalSeries(self.site, -self.valuation, out, -self.valuation + rel)

    def __truediv__(self, other: object) -> LocalSeries:
        if not isinstance(other, LocalSeries):
            return self * div(1, other)
        return self * other.inverse()

    def __pow__(self, k: int) -> LocalSeries:
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return LocalSeries(self.site, 0, [1], 10**9)
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def sqrt(self, branch: int = 1) -> LocalSeries:
        """Square root with leading coefficient ``branch * sqrt(leading)``."""
        if self.is_zero():
            raise InvalidInput("square root of a series that vanishes to its truncation order")
        if self.valuation % 2:
            raise OddValuation(f"valuation {self.valuation} is odd")
        if branch not in (1, -1):
            raise InvalidInput("branch must be +1 or -1")
        a = self.coeffs
        root0 = sqrt(a[0])
        if is_exact(a[0]) and not is_exact(root0):
            a = [to_float(c) for c in a]
            root0 = sqrt(a[0])
        root0 = branch * root0
        rel = self.order - self.valuation
        out = [root0]
        two_root0 = 2 * root0
        for k in range(1, rel + 1):
            acc = a[k] if k < len(a) else 0
            for j in range(1, k):
                acc = acc - out[j] * out[k - j]
            out.append(div(acc, two_root0))
        v = self.valuation // 2
        return LocalSeries(self.site, v, out, v + rel)

    def derivative(self) -> LocalSeries:
        """d/ds."""
        out = [(self.valuation + k) * c for k, c in enumerate(self.coeffs)]
        return LocalSeries(self.site, self.valuation - 1, out, self.order - 1)

    def antiderivative(self) -> LocalSeries:
        """Termwise ``integral ds`` with zero constant; needs a vanishing s^-1 term."""
        res = self.coefficient(-1) if self.order >= -1 else 0
        if res != 0:
            raise ResidueObstruction(res)
        out = []
        for k, c in enumerate(self.coeffs):
            e = self.valuation + k
            out.append(0 if e == -1 else div(c, e + 1))
        return LocalSeries(self.site, self.valuation + 1, out, self.order + 1)

    def max_abs(self) -> float:
        return max((magnitude(c) for c in self.coeffs), default=0.0)

    def evaluate(self, s: Scalar) -> Scalar:
        acc: Scalar = 0
        for k, c in enumerate(self.coeffs):
            acc = acc + c * s ** (self.valuation + k)
        return acc


class LocalOneForm:
    """``radicand**(-1/2) * series(s) ds``.

    Forms odd under the sheet involution carry a ``radicand`` ``c``: the
    sign of ``sqrt(c)`` is the sheet choice, and products of two such
    forms only involve ``c`` itself, so residue pairings stay exact.
    ``radicand=None`` means an ordinary form.
    """

    __slots__ = ("series", "radicand")

    def __init__(self, series: LocalSeries, radicand: Scalar | None = None) -> None:
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "radicand", radicand)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("LocalOneForm is immutable")

    @property
    def site(self) -> ExpansionSite:
        return self.series.site

    def __repr__(self) -> str:
        return f"LocalOneForm({self.series!r}, radicand={self.radicand!r})"

    def __add__(self, other: LocalOneForm) -> LocalOneForm:
        if other.radicand != self.radicand:
            raise InvalidInput("cannot add one-forms with different radicands")
        return LocalOneForm(self.series + other.series, self.radicand)

    def scale(self, c: Scalar) -> LocalOneForm:
        return LocalOneForm(self.series * c, self.radicand)


def dx_ds_series(site: ExpansionSite, order: int) -> LocalSeries:
    r = site.ramification
    if site.at_infinity:
        return LocalSeries(site, -r - 1, [-r], 10**9)
    return LocalSeries(site, r - 1, [r], 10**9)


def function_to_form(f: LocalSeries, radicand: Scalar | None = None) -> LocalOneForm:
    """The one-form ``f dx`` written in ``ds``."""
    return LocalOneForm(f * dx_ds_series(f.site, f.order), radicand)


def _laurent_coeffs(p: Polynomial, site: ExpansionSite, poles=None) -> tuple[int, list[Scalar]]:
    """Exact Laurent polynomial in ``s`` of ``p`` after substitution."""
    r = site.ramification
    if site.at_infinity:
        d = p.degree
        if d < 0:
            return 0, []
        # p(s^-r) = sum_j p_j s^(-r j): lowest exponent -r d
        out: list[Scalar] = [0] * (r * d + 1)
        for j, c in enumerate(p.coeffs):
            out[r * (d - j)] = c
        return -r * d, out
    c = site.location
    if poles is not None:
        acc = Polynomial((1,))
        for root, mult in poles:
            shift = c - root
            factor = Polynomial([shift] + [0] * (r - 1) + [1])
            for _ in range(mult):
                acc = acc * factor
        shifted = acc
    else:
        t = p.taylor_shift(c)
        out = [0] * (r * len(t.coeffs))
        for j, coeff in enumerate(t.coeffs):
            out[r * j] = coeff
        shifted = Polynomial(out)
    return 0, list(shifted.coeffs) if not shifted.is_zero() else []


def _poly_series(p: Polynomial, site: ExpansionSite, rel: int, poles=None) -> LocalSeries:
    v, coeffs = _laurent_coeffs(p, site, poles)
    probe = LocalSeries(site, v, coeffs, v + len(coeffs) + rel)
    if probe.is_zero():
        raise InvalidInput("polynomial vanishes identically")
    return LocalSeries(site, probe.valuation, probe.coeffs, probe.valuation + rel)


def expand_relative(f: RationalFunction, site: ExpansionSite, rel: int) -> LocalSeries:
    """Expansion with ``rel`` terms of relative precision beyond the valuation."""
    if f.is_zero():
        return LocalSeries(site, 0, [], rel)
    num = _poly_series(f.num, site, rel)
    den = _poly_series(f.den, site, rel, poles=f.poles)
    return num / den


def puiseux_expand(f: RationalFunction, site: ExpansionSite, order: int) -> LocalSeries:
    """Expansion of ``f`` at ``site`` valid through ``s**order``."""
    if f.is_zero():
        return LocalSeries(site, 0, [], order)
    num = _poly_series(f.num, site, 0)
    den = _poly_series(f.den, site, 0, poles=f.poles)
    valuation = num.valuation - den.valuation
    if order < valuation:
        raise InvalidInput(f"order {order} below valuation {valuation}")
    result = expand_relative(f, site, order - valuation)
    return result.truncate(order)


def series_sqrt(s: LocalSeries, branch: int = 1) -> LocalSeries:
    return s.sqrt(branch)


def series_antiderivative(form: LocalOneForm) -> LocalSeries:
    if form.radicand is not None:
        raise InvalidInput("antiderivative of a radical form: use its series")
    return form.series.antiderivative()


def series_residue(form: LocalOneForm) -> Scalar:
    """Coefficient of ``s**-1 ds`` (radicand forms use the principal root)."""
    if form.series.order < -1:
        raise InvalidInput("truncation order below -1")
    res = form.series.coefficient(-1)
    if form.radicand is None or res == 0:
        return res
    return div(res, sqrt(form.radicand))


def pair_residue(a: LocalOneForm, b: LocalOneForm) -> Scalar:
    """Residue of ``d^-1(a) * b``; radicands combine to ``1/radicand``."""
    if a.site != b.site:
        raise InvalidInput("forms live at different sites")
    if a.radicand != b.radicand:
        raise InvalidInput("pairing needs matching radicands")
    product = a.series.antiderivative() * b.series
    if product.order < -1:
        raise InvalidInput("truncation too low for a residue")
    res = product.coefficient(-1)
    if a.radicand is not None:
        res = div(res, a.radicand)
    return res


def radical_form(
    numerator: RationalFunction,
    radicand: RationalFunction,
    power: int,
    site: ExpansionSite,
    order: int,
    sheet_value: Scalar | None = None,
) -> LocalOneForm:
    """Expand ``numerator * radicand**(-power/2) dx`` at ``site`` through ``s**order``.

    With ``y**2 = radicand`` the local root is written ``y = lam * Y`` where
    ``Y`` has leading coefficient 1 and ``lam**2 = c`` is the leading
    coefficient of the radicand.  When ``sheet_value`` (the value of ``y`` at
    a regular point) is given, ``lam`` is that value and the result is an
    ordinary form; otherwise ``c`` is carried as the form's radicand.
    """
    if power % 2 == 0:
        raise InvalidInput("radical forms need an odd power")
    rel = 6
    for _ in range(12):
        g = expand_relative(radicand, site, rel + 2 * power + 4)
        if g.valuation % 2:
            raise OddValuation(f"radicand has odd valuation {g.valuation} at {site}")
        c = g.leading
        if numerator.is_zero():
            body = LocalSeries(site, 0, [], order)
            break
        y_norm = (g / c).sqrt()
        num = expand_relative(numerator, site, rel + 4)
        body = num * y_norm ** (-power) * dx_ds_series(site, 0)
        if body.order >= order:
            break
        rel += order - body.order + 2
    else:
        raise InvalidInput("could not reach the requested truncation order")
    body = body.truncate(order)
    half = (power - 1) // 2
    if sheet_value is not None:
        return LocalOneForm(body * div(1, sheet_value**power), None)
    return LocalOneForm(body * div(1, c**half) if half else body, c)
