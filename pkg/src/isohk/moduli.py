"""Points of the moduli space of quadratic differentials and its fibre extension.

A point of ``M`` fixes the potential ``Q0``: a monic polynomial part of
degree ``2 m_inf - 5`` plus principal parts of odd order ``2 m_a - 1`` at the
finite poles ``w_a``.  A point of ``X`` adds the apparent singularities
``q_I`` with their parameters ``v_I`` and the sheet signs ``eps_I`` fixing
``p_I = eps_I sqrt(Q0(q_I))``.  From these the full potential
``Q = Q0/hbar**2 + Q1/hbar + Q2`` is assembled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import linalg
from .algebra.poly import Polynomial
from .algebra.ratfunc import RationalFunction
from .algebra.resultant import discriminant, relative_root_separation
from .algebra.scalar import Scalar, all_exact, div, magnitude, sqrt, to_float
from .algebra.series import (
    INFINITY,
    ExpansionSite,
    LocalOneForm,
    puiseux_expand,
    radical_form,
)
from .errors import (
    BranchPointCollision,
    InvalidInput,
    InvalidPoint,
    PoleAtZeroOfPsi,
    StructureViolation,
    UnsupportedOrders,
)


@dataclass(frozen=True)
class PoleOrders:
    """Pole orders ``2 m_inf - 1`` at infinity and ``2 m_a - 1`` at each finite pole."""

    m_infinity: int
    m_finite: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "m_finite", tuple(self.m_finite))
        if self.m_infinity < 3:
            raise UnsupportedOrders("the pole at infinity must have order at least 5")
        if any(m < 1 for m in self.m_finite):
            raise UnsupportedOrders("finite pole orders must be positive")
        if self.m_infinity == 3 and not self.m_finite:
            raise UnsupportedOrders("the single pole of order 5 is excluded")

    @classmethod
    def from_pole_orders(cls, orders: Sequence[int]) -> PoleOrders:
        """Parse a list of odd pole orders; the largest one is placed at infinity."""
        orders = [int(k) for k in orders]
        if not orders:
            raise UnsupportedOrders("at least one pole is required")
        if any(k % 2 == 0 or k < 1 for k in orders):
            raise UnsupportedOrders("pole orders must be odd positive integers")
        top = max(orders)
        if top < 5:
            raise UnsupportedOrders("one pole must have order at least 5")
        rest = list(orders)
        rest.remove(top)
        return cls((top + 1) // 2, tuple((k + 1) // 2 for k in rest))

    @property
    def pole_orders(self) -> tuple[int, ...]:
        return (2 * self.m_infinity - 1,) + tuple(2 * m - 1 for m in self.m_finite)

    @property
    def n(self) -> int:
        return self.m_infinity - 3 + sum(self.m_finite)

    @property
    def dim_M(self) -> int:
        return 2 * self.n

    @property
    def num_finite(self) -> int:
        return len(self.m_finite)

    @property
    def num_a_inf(self) -> int:
        return 2 * self.m_infinity - 6

    def moduli_labels(self) -> list[str]:
        labels = [f"a^inf_{i}" for i in range(self.num_a_inf)]
        for alpha, m in enumerate(self.m_finite, start=1):
            labels += [f"a^{alpha}_{i}" for i in range(1, 2 * m)]
            labels.append(f"w_{alpha}")
        return labels

    def labels(self) -> list[str]:
        n = self.n
        return self.moduli_labels() + [f"q_{i}" for i in range(1, n + 1)] + [f"v_{i}" for i in range(1, n + 1)]

    def w_index(self, alpha: int) -> int:
        """Position of ``w_alpha`` (0-based alpha) in the coordinate frame."""
        return self.a_index(alpha, 2 * self.m_finite[alpha] - 1) + 1

    def a_index(self, alpha: int | None, i: int) -> int:
        """Position of ``a_i`` at infinity (``alpha=None``) or at the finite pole ``alpha``."""
        if alpha is None:
            return i
        pos = self.num_a_inf
        for beta in range(alpha):
            pos += 2 * self.m_finite[beta]
        return pos + i - 1

    def lower_coordinates(self) -> list[tuple[int | None, int]]:
        """``(alpha, i)`` of the coordinates entering the matrix ``N`` (frame order)."""
        out: list[tuple[int | None, int]] = [(None, i) for i in range(self.m_infinity - 3)]
        for alpha, m in enumerate(self.m_finite):
            out += [(alpha, i) for i in range(1, m + 1)]
        return out

    def homothety_weights(self) -> list[Fraction]:
        """Scaling weights of every coordinate of ``X`` under the Euler field."""
        d = 2 * self.m_infinity - 3
        base = 4 * self.m_infinity - 10
        weights = [Fraction(base - 2 * i, d) for i in range(self.num_a_inf)]
        for m in self.m_finite:
            weights += [Fraction(base + 2 * i, d) for i in range(1, 2 * m)]
            weights.append(Fraction(2, d))
        weights += [Fraction(2, d)] * self.n + [Fraction(-2, d)] * self.n
        return weights


@dataclass(frozen=True)
class ModuliPoint:
    """Coordinates ``a_inf``, ``w_a`` and ``a^(a)_i`` of a point of ``M``.

    The constructor does no validation so that jet or perturbed coordinates
    can flow through the potential builders; use :meth:`build` for checked
    points.
    """

    orders: PoleOrders
    a_inf: tuple[Scalar, ...]
    w: tuple[Scalar, ...] = ()
    a_fin: tuple[tuple[Scalar, ...], ...] = ()

    @classmethod
    def build(
        cls,
        orders: PoleOrders,
        a_inf: Sequence[Scalar],
        w: Sequence[Scalar] = (),
        a_fin: Sequence[Sequence[Scalar]] = (),
    ) -> ModuliPoint:
        pt = cls(orders, tuple(a_inf), tuple(w), tuple(tuple(a) for a in a_fin))
        pt.validate()
        return pt

    def coordinates(self) -> tuple[Scalar, ...]:
        out = list(self.a_inf)
        for a, w in zip(self.a_fin, self.w):
            out += list(a) + [w]
        return tuple(out)

    @classmethod
    def from_coordinates(cls, orders: PoleOrders, values: Sequence[Scalar]) -> ModuliPoint:
        values = list(values)
        if len(values) != orders.dim_M:
            raise InvalidInput(f"expected {orders.dim_M} moduli coordinates, got {len(values)}")
        k = orders.num_a_inf
        a_inf, pos = tuple(values[:k]), k
        w, a_fin = [], []
        for m in orders.m_finite:
            a_fin.append(tuple(values[pos : pos + 2 * m - 1]))
            w.append(values[pos + 2 * m - 1])
            pos += 2 * m
        return cls(orders, a_inf, tuple(w), tuple(a_fin))

    def shape_errors(self) -> list[str]:
        o = self.orders
        errors = []
        if len(self.a_inf) != o.num_a_inf:
            errors.append(f"a_inf needs {o.num_a_inf} entries")
        if len(self.w) != o.num_finite or len(self.a_fin) != o.num_finite:
            errors.append(f"expected {o.num_finite} finite poles")
        for a, m in zip(self.a_fin, o.m_finite):
            if len(a) != 2 * m - 1:
                errors.append(f"finite pole of order {2 * m - 1} needs {2 * m - 1} coefficients")
        return errors

    def validate(self) -> None:
        errors = self.shape_errors()
        if errors:
            raise InvalidPoint("; ".join(errors))
        if len(set(map(_key, self.w))) != len(self.w):
            raise InvalidPoint("finite poles must be distinct")
        if any(a[-1] == 0 for a in self.a_fin):
            raise InvalidPoint("leading coefficient of a finite pole vanishes")
        q0 = build_Q0(self.orders, self)
        if q0.num.degree >= 1 and not _simple_zeros(q0.num):
            raise InvalidPoint("Q0 has a repeated zero")

    def to_float(self) -> ModuliPoint:
        return ModuliPoint.from_coordinates(self.orders, [to_float(c) for c in self.coordinates()])


@dataclass(frozen=True)
class ExtendedPoint:
    """A point of ``X``: a moduli point plus ``(q_I, v_I)`` and sheet signs ``eps_I``."""

    base: ModuliPoint
    q: tuple[Scalar, ...]
    v: tuple[Scalar, ...]
    eps: tuple[int, ...]

    @classmethod
    def build(
        cls,
        base: ModuliPoint,
        q: Sequence[Scalar],
        v: Sequence[Scalar],
        eps: Sequence[int] | None = None,
    ) -> ExtendedPoint:
        n = base.orders.n
        eps = tuple(eps) if eps is not None else (1,) * n
        pt = cls(base, tuple(q), tuple(v), tuple(int(e) for e in eps))
        pt.validate()
        return pt

    @property
    def orders(self) -> PoleOrders:
        return self.base.orders

    @property
    def n(self) -> int:
        return self.base.orders.n

    @property
    def dim(self) -> int:
        return 4 * self.n

    def labels(self) -> list[str]:
        return self.orders.labels()

    def q_index(self, i: int) -> int:
        return 2 * self.n + i

    def v_index(self, i: int) -> int:
        return 3 * self.n + i

    def validate(self) -> None:
        self.base.validate()
        n = self.n
        if len(self.q) != n or len(self.v) != n or len(self.eps) != n:
            raise InvalidPoint(f"q, v and eps need {n} entries each")
        if any(e not in (1, -1) for e in self.eps):
            raise InvalidPoint("sheet signs must be +1 or -1")
        if len(set(map(_key, self.q))) != n:
            raise InvalidPoint("the points q_I must be distinct")
        if set(map(_key, self.q)) & set(map(_key, self.base.w)):
            raise InvalidPoint("q_I must avoid the finite poles")
        for i in range(n):
            compute_p(self.orders, self, i)

    def coordinates(self) -> tuple[Scalar, ...]:
        return self.base.coordinates() + self.q + self.v

    def with_coordinates(self, values: Sequence[Scalar]) -> ExtendedPoint:
        """Same sheet signs, new coordinates; no validation (jets allowed)."""
        values = list(values)
        if len(values) != self.dim:
            raise InvalidInput(f"expected {self.dim} coordinates, got {len(values)}")
        n, m = self.n, 2 * self.n
        base = ModuliPoint.from_coordinates(self.orders, values[:m])
        return ExtendedPoint(base, tuple(values[m : m + n]), tuple(values[m + n :]), self.eps)

    def continued(self, values: Sequence[Scalar]) -> ExtendedPoint:
        """Nearby point whose sheet signs keep every ``p_I`` close to the current one."""
        moved = self.with_coordinates(values)
        eps = []
        for e, p_old, p_new in zip(moved.eps, self.p_values(), moved.p_values()):
            eps.append(e if magnitude(p_new - p_old) <= magnitude(p_new + p_old) else -e)
        return ExtendedPoint(moved.base, moved.q, moved.v, tuple(eps))

    def flipped(self) -> ExtendedPoint:
        """The image under the fibrewise involution ``p -> -p``."""
        return ExtendedPoint(self.base, self.q, self.v, tuple(-e for e in self.eps))

    def to_float(self) -> ExtendedPoint:
        return self.with_coordinates([to_float(c) for c in self.coordinates()])

    def is_exact(self) -> bool:
        return all_exact(self.coordinates()) and all_exact(self.p_values())

    def Q0(self) -> RationalFunction:
        return build_Q0(self.orders, self.base)

    def p_values(self) -> tuple[Scalar, ...]:
        return tuple(compute_p(self.orders, self, i) for i in range(self.n))

    def q_values(self) -> tuple[Scalar, ...]:
        return self.q

    def v_values(self) -> tuple[Scalar, ...]:
        return self.v

    def potentials(self) -> PotentialTriple:
        p = self.p_values()
        q0 = self.Q0()
        return PotentialTriple(q0, build_Q1(self.orders, self, p), build_Q2(self.orders, self))

    def pole_sites(self) -> list[ExpansionSite]:
        """Branch points of ``Sigma_0`` among the poles: every ``w_a`` and infinity."""
        return [ExpansionSite(w, 2) for w in self.base.w] + [ExpansionSite(INFINITY, 2)]

    def moduli_dpdtheta(self) -> list[list[Scalar]]:
        """``dp_I/dtheta`` for every moduli coordinate ``theta`` (rows I)."""
        o = self.orders
        p = self.p_values()
        rows = []
        for i, (qi, pi) in enumerate(zip(self.q, p)):
            row: list[Scalar] = [div(qi**k, 2 * pi) for k in range(o.num_a_inf)]
            for alpha, (w, a) in enumerate(zip(self.base.w, self.base.a_fin)):
                row += [div(1, 2 * pi * (qi - w) ** k) for k in range(1, len(a) + 1)]
                dw = sum(div(k * a[k - 1], (qi - w) ** (k + 1)) for k in range(1, len(a) + 1))
                row.append(div(dw, 2 * pi))
            rows.append(row)
        return rows


def _key(x: Scalar) -> object:
    """Hashable identity for duplicate detection."""
    try:
        hash(x)
        return x
    except TypeError:
        return complex(x)


def _simple_zeros(p: Polynomial, tol: float = 1e-10) -> bool:
    if p.degree < 2:
        return True
    if p.is_exact():
        return discriminant(p) != 0
    return relative_root_separation(p) > tol


@dataclass(frozen=True)
class PotentialTriple:
    Q0: RationalFunction
    Q1: RationalFunction
    Q2: RationalFunction

    def assemble(self, hbar: Scalar) -> RationalFunction:
        """``Q0/hbar**2 + Q1/hbar + Q2`` keeping the pole factorisation."""
        if hbar == 0:
            raise InvalidInput("hbar must be nonzero")
        return self.Q0 * div(1, hbar * hbar) + self.Q1 * div(1, hbar) + self.Q2


def _principal_part(coeffs: Sequence[Scalar], root: Scalar) -> RationalFunction:
    """``sum_i coeffs[i-1] / (x - root)**i`` over a single factored denominator."""
    k = len(coeffs)
    shift = Polynomial.linear_factor(root)
    num = Polynomial()
    power = Polynomial((1,))
    for i in range(k, 0, -1):
        num = num + power * coeffs[i - 1]
        power = power * shift
    return RationalFunction.from_poles(num, ((root, k),))


def build_Q0(orders: PoleOrders, pt: ModuliPoint) -> RationalFunction:
    """``x**(2 m_inf - 5) + sum a_i x**i + sum_a sum_i a^(a)_i / (x - w_a)**i``."""
    errors = pt.shape_errors()
    if errors:
        raise InvalidPoint("; ".join(errors))
    poly = Polynomial(list(pt.a_inf) + [0, 1])
    result = RationalFunction.polynomial(poly)
    for w, a in zip(pt.w, pt.a_fin):
        result = result + _principal_part(a, w)
    return result


def compute_p(orders: PoleOrders, ext: ExtendedPoint, i: int) -> Scalar:
    """``p_I = eps_I * sqrt(Q0(q_I))`` with the principal (or positive rational) root."""
    value = build_Q0(orders, ext.base)(ext.q[i])
    if value == 0:
        raise BranchPointCollision(f"q_{i + 1} is a zero of Q0")
    return ext.eps[i] * sqrt(value)


def _lagrange_numerator(nodes: Sequence[Scalar], values: Sequence[Scalar]) -> Polynomial:
    """Interpolating polynomial of degree < n through ``(nodes[i], values[i])``."""
    out = Polynomial()
    for i, (qi, val) in enumerate(zip(nodes, values)):
        basis = Polynomial((1,))
        denom: Scalar = 1
        for j, qj in enumerate(nodes):
            if j != i:
                basis = basis * Polynomial.linear_factor(qj)
                denom = denom * (qi - qj)
        out = out + basis * div(val, denom)
    return out


def _interpolated(
    nodes: Sequence[Scalar],
    values: Sequence[Scalar],
    f_poles: Sequence[tuple[Scalar, int]],
) -> RationalFunction:
    """``P(x)/F(x)`` with ``P`` interpolating ``F(q_I) * values[I]``."""
    f = Polynomial.from_roots(f_poles)
    num = _lagrange_numerator(nodes, [f(qi) * val for qi, val in zip(nodes, values)])
    return RationalFunction.from_poles(num, f_poles)


def r_node_values(q: Sequence[Scalar], p: Sequence[Scalar], v: Sequence[Scalar]) -> list[Scalar]:
    """Values ``R(q_I) = 2 p_I v_I - sum_{K != I} p_K / (q_I - q_K)``."""
    out = []
    for i in range(len(q)):
        val = 2 * p[i] * v[i]
        for k in range(len(q)):
            if k != i:
                val = val - div(p[k], q[i] - q[k])
        out.append(val)
    return out


def s_node_values(q: Sequence[Scalar], v: Sequence[Scalar]) -> list[Scalar]:
    """Values ``S(q_I) = v_I**2 - sum_{K != I} (3/(4 (q_I - q_K)**2) + v_K/(q_I - q_K))``."""
    out = []
    for i in range(len(q)):
        val = v[i] * v[i]
        for k in range(len(q)):
            if k != i:
                d = q[i] - q[k]
                val = val - div(3, 4 * d * d) - div(v[k], d)
        out.append(val)
    return out


def _check_distinct_q(q: Sequence[Scalar]) -> None:
    if len(set(map(_key, q))) != len(q):
        raise InvalidPoint("the points q_I must be distinct")


def _f_poles(orders: PoleOrders, pt: ModuliPoint) -> list[tuple[Scalar, int]]:
    return [(w, m) for w, m in zip(pt.w, orders.m_finite)]


def interpolation_parts(
    orders: PoleOrders, ext: ExtendedPoint, p: Sequence[Scalar] | None = None
) -> tuple[RationalFunction, RationalFunction]:
    """The regular parts ``R`` and ``S`` of ``Q1`` and ``Q2`` near the ``q_I``."""
    _check_distinct_q(ext.q)
    if p is None:
        p = ext.p_values()
    poles = _f_poles(orders, ext.base)
    r = _interpolated(ext.q, r_node_values(ext.q, p, ext.v), poles)
    s = _interpolated(ext.q, s_node_values(ext.q, ext.v), poles)
    return r, s


def build_Q1(orders: PoleOrders, ext: ExtendedPoint, p: Sequence[Scalar] | None = None) -> RationalFunction:
    """``sum p_I/(x - q_I) + R(x)`` with ``R = P/F`` interpolating the node values."""
    if p is None:
        p = ext.p_values()
    result, _ = interpolation_parts(orders, ext, p)
    for qi, pi in zip(ext.q, p):
        result = result + RationalFunction.simple_pole(pi, qi)
    return result


def build_Q2(orders: PoleOrders, ext: ExtendedPoint) -> RationalFunction:
    """``sum 3/(4 (x - q_I)**2) + sum v_I/(x - q_I) + S(x)``."""
    _check_distinct_q(ext.q)
    result = _interpolated(ext.q, s_node_values(ext.q, ext.v), _f_poles(orders, ext.base))
    for qi, vi in zip(ext.q, ext.v):
        shift = Polynomial.linear_factor(qi)
        result = result + RationalFunction.from_poles(shift * vi + Fraction(3, 4), ((qi, 2),))
    return result


def assemble_Q(triple: PotentialTriple, hbar: Scalar) -> RationalFunction:
    """The full potential as a single normalised rational function."""
    return triple.assemble(hbar).normalized()


@dataclass(frozen=True)
class ApparentSingularityReport:
    """Laurent coefficients of ``Q`` at ``q`` (orders -2, -1, 0) and deviations."""

    coefficients: tuple[Scalar, Scalar, Scalar]
    deviations: tuple[Scalar, Scalar, Scalar]
    residual: float


def verify_apparent_singularity(Q: RationalFunction, q: Scalar, u: Scalar) -> ApparentSingularityReport:
    """Compare the Laurent data of ``Q`` at ``q`` with ``3/4, u, u**2``."""
    site = ExpansionSite(q, 1)
    series = puiseux_expand(Q, site, 0)
    if series.valuation != -2:
        raise StructureViolation(f"expected a double pole at q, found valuation {series.valuation}")
    coeffs = tuple(series.coefficient(k) for k in (-2, -1, 0))
    target = (Fraction(3, 4), u, u * u)
    devs = tuple(c - t for c, t in zip(coeffs, target))
    return ApparentSingularityReport(coeffs, devs, max(magnitude(d) for d in devs))


@dataclass(frozen=True)
class SheetForms:
    """Local expansions of ``psi``, ``sigma`` and ``tau`` on the curve ``y0**2 = Q0``.

    Over ``q_I`` the sheet with ``y0(q_I) = +p_I`` is used; at the poles the
    sheet is carried symbolically as a radicand (see :func:`radical_form`).
    """

    triple: PotentialTriple
    q: tuple[Scalar, ...]
    p: tuple[Scalar, ...]

    def _sheet_value(self, site: ExpansionSite) -> Scalar | None:
        if site.at_infinity or site.ramification != 1:
            return None
        for qi, pi in zip(self.q, self.p):
            if site.location == qi:
                return pi
        value = self.triple.Q0(site.location)
        if value == 0:
            raise PoleAtZeroOfPsi("site is a zero of Q0")
        return None

    def psi(self, site: ExpansionSite, order: int) -> LocalOneForm:
        return radical_form(self.triple.Q0, self.triple.Q0, 1, site, order, self._sheet_value(site))

    def sigma(self, site: ExpansionSite, order: int) -> LocalOneForm:
        return radical_form(self.triple.Q1 * Fraction(1, 2), self.triple.Q0, 1, site, order, self._sheet_value(site))

    def tau(self, site: ExpansionSite, order: int) -> LocalOneForm:
        t = self.triple
        num = (t.Q0 * t.Q2 * 4 - t.Q1 * t.Q1) * Fraction(1, 8)
        return radical_form(num, t.Q0, 3, site, order, self._sheet_value(site))

    def sigma_residues(self) -> list[Scalar]:
        """Residues of ``sigma`` over each ``q_I`` on the sheet ``y0 = +p_I``."""
        out = []
        for qi in self.q:
            form = self.sigma(ExpansionSite(qi, 1), 0)
            out.append(form.series.coefficient(-1))
        return out

    def tau_valuations(self, sites: Sequence[ExpansionSite]) -> list[int]:
        return [self.tau(site, 2).series.valuation for site in sites]


def sigma_tau(orders: PoleOrders, ext: ExtendedPoint) -> SheetForms:
    """Providers for ``sigma = Q1 dx/(2 y0)`` and ``tau = (4 Q0 Q2 - Q1**2) dx/(8 y0**3)``."""
    forms = SheetForms(ext.potentials(), ext.q, ext.p_values())
    for res in forms.sigma_residues():
        if res != Fraction(1, 2) and magnitude(res - Fraction(1, 2)) > 1e-9:
            raise StructureViolation(f"sigma residue {res} differs from 1/2")
    for val in forms.tau_valuations(ext.pole_sites()):
        if val < 0:
            raise StructureViolation("tau has a pole at a pole of Q0")
    return forms


def spectral_polynomial(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar) -> Polynomial:
    """``hbar**2 prod (x - q_I)**2 prod (x - w_a)**(2 m_a - 1) Q(x)``."""
    q = ext.potentials().assemble(hbar)
    target = [(w, 2 * m - 1) for w, m in zip(ext.base.w, orders.m_finite)] + [(qi, 2) for qi in ext.q]
    missing = []
    for root, mult in target:
        got = next((m for r, m in q.poles if r == root), 0)
        if got > mult:
            raise StructureViolation("potential has a pole of unexpected order")
        missing.append((root, mult - got))
    return q.num * Polynomial.from_roots(missing) * (hbar * hbar)


@dataclass(frozen=True)
class GenericityReport:
    simple_zeros: bool
    discriminant: Scalar


def _genericity(p: Polynomial, tol: float) -> GenericityReport:
    if p.degree < 2:
        return GenericityReport(True, 1)
    disc = discriminant(p)
    if p.is_exact():
        return GenericityReport(disc != 0, disc)
    # Float mode: the raw discriminant has no natural scale, so simplicity is
    # judged by the smallest relative distance between numerical roots.
    return GenericityReport(relative_root_separation(p) > tol, disc)


def genericity_check(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, tol: float = 1e-10) -> GenericityReport:
    """Whether the spectral polynomial has simple zeros, via its discriminant."""
    if hbar == 0:
        raise InvalidInput("hbar must be nonzero")
    return _genericity(spectral_polynomial(orders, ext, hbar), tol)


@dataclass(frozen=True)
class CurveStats:
    branch_count: int
    genus_Sigma: int
    genus_Sigma0: int


def _branch_count(num: Polynomial, finite_odd_poles: int, den_degree: int) -> int:
    count = num.degree + finite_odd_poles
    if (num.degree - den_degree) % 2:
        count += 1
    return count


def curve_stats(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, tol: float = 1e-10) -> CurveStats:
    """Riemann-Hurwitz bookkeeping for ``y**2 = Q`` and ``y0**2 = Q0``."""
    big = spectral_polynomial(orders, ext, hbar)
    if not _genericity(big, tol).simple_zeros:
        raise StructureViolation("spectral curve is singular at this point")
    n_fin = orders.num_finite
    den_deg = sum(2 * m - 1 for m in orders.m_finite)
    branch = _branch_count(big, n_fin, den_deg + 2 * ext.n)
    small = ext.Q0().num
    if not _genericity(small, tol).simple_zeros:
        raise StructureViolation("Q0 has a repeated zero")
    branch0 = _branch_count(small, n_fin, den_deg)
    stats = CurveStats(branch, branch // 2 - 1, branch0 // 2 - 1)
    if stats.genus_Sigma != 2 * ext.n or stats.genus_Sigma0 != ext.n:
        raise StructureViolation(f"genus mismatch: {stats}")
    return stats


def lower_coordinate_matrix(orders: PoleOrders, w: Sequence[Scalar], q: Sequence[Scalar]) -> linalg.Matrix:
    """The matrix ``N`` with rows ``q_I`` and entries ``q_I**i`` or ``(q_I - w_a)**(-i)``."""
    rows = []
    for qi in q:
        row = []
        for alpha, i in orders.lower_coordinates():
            row.append(qi**i if alpha is None else div(1, (qi - w[alpha]) ** i))
        rows.append(tuple(row))
    return tuple(rows)


def _random_rational(rng: random.Random, height: int, nonzero: bool = False) -> Fraction:
    while True:
        value = Fraction(rng.randint(-height, height), rng.randint(1, height))
        if value or not nonzero:
            return value


def random_point(
    orders: PoleOrders,
    seed: int | random.Random,
    height: int = 6,
    max_tries: int = 1000,
    accept: Callable[[ExtendedPoint], bool] | None = None,
    bound: float | None = 60,
) -> ExtendedPoint:
    """A valid exact point with rational ``p_I``, rejection-sampled and seeded.

    All coordinates except the ``n`` lowest principal-part coefficients are
    drawn at random together with ``q_I`` and ``p_I``; the remaining ones
    solve the linear system ``Q0(q_I) = p_I**2``, whose matrix is ``N``.
    Points with a solved coordinate above ``bound`` in size are rejected,
    which keeps float cross-checks well conditioned.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    n = orders.n
    lower = orders.lower_coordinates()
    for _ in range(max_tries):
        w = [_random_rational(rng, height) for _ in orders.m_finite]
        q = [_random_rational(rng, height) for _ in range(n)]
        if len(set(w + q)) != len(w) + len(q):
            continue
        a_inf = [_random_rational(rng, height) for _ in range(orders.num_a_inf)]
        a_fin = []
        for m in orders.m_finite:
            coeffs = [_random_rational(rng, height) for _ in range(2 * m - 1)]
            if m > 1:
                coeffs[-1] = _random_rational(rng, height, nonzero=True)
            a_fin.append(coeffs)
        p = [_random_rational(rng, height, nonzero=True) for _ in range(n)]
        v = [_random_rational(rng, height) for _ in range(n)]
        for alpha, i in lower:
            if alpha is None:
                a_inf[i] = 0
            else:
                a_fin[alpha][i - 1] = 0
        partial = build_Q0(orders, ModuliPoint(orders, tuple(a_inf), tuple(w), tuple(map(tuple, a_fin))))
        mat = lower_coordinate_matrix(orders, w, q)
        if linalg.det(mat) == 0:
            continue
        rhs = tuple((pi * pi - partial(qi),) for qi, pi in zip(q, p))
        sol = linalg.solve(mat, rhs)
        for (alpha, i), (val,) in zip(lower, sol):
            if alpha is None:
                a_inf[i] = val
            else:
                a_fin[alpha][i - 1] = val
        if bound is not None and any(abs(val) > bound for (val,) in sol):
            continue
        base = ModuliPoint(orders, tuple(a_inf), tuple(w), tuple(map(tuple, a_fin)))
        eps = [1 if pi > 0 else -1 for pi in p]
        try:
            ext = ExtendedPoint.build(base, q, v, eps)
        except InvalidPoint:
            continue
        if accept is not None and not accept(ext):
            continue
        return ext
    raise InvalidInput("could not sample a valid point")
