"""Isomonodromic flow generators and the flatness equation.

A flow on ``X`` is isomonodromic when there is a rational ``A(x)`` with

    -2 D_L Q = A''' - 4 Q A' - 2 Q' A,

which is the compatibility condition for the deformed Schrodinger equation.
Generators come in two families: ``n`` isopotential flows (``D_L Q = 0``,
``A = 0``) and ``n`` main flows ``L_I`` with ``A = 1/(x - q_I)``.  Each
generator splits as ``L = U + V/hbar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .algebra import linalg
from .algebra.poly import Polynomial
from .algebra.ratfunc import RationalFunction, common_numerators
from .algebra.scalar import Jet, Scalar, div, magnitude
from .errors import InvalidInput
from .moduli import (
    ExtendedPoint,
    PoleOrders,
    PotentialTriple,
    interpolation_parts,
    lower_coordinate_matrix,
)


class FlowModel(Protocol):
    """What the flow machinery needs from a point (generic or Painleve VI)."""

    @property
    def dim(self) -> int: ...

    def coordinates(self) -> tuple[Scalar, ...]: ...

    def with_coordinates(self, values: Sequence[Scalar]) -> FlowModel: ...

    def potentials(self) -> PotentialTriple: ...

    def q_values(self) -> tuple[Scalar, ...]: ...


@dataclass(frozen=True)
class CoordinateFrame:
    """Canonical coordinate order on ``X``; every matrix uses it."""

    labels: tuple[str, ...]

    @classmethod
    def for_orders(cls, orders: PoleOrders) -> CoordinateFrame:
        return cls(tuple(orders.labels()))

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class FlowValue:
    """A generator ``U + V/hbar`` with its flatness partner ``A``.

    ``A(x) = sum_I f_I/(x - q_I) + sum_k c_k x**k`` with ``f_I`` in
    ``A_coefficients`` and the optional polynomial part in ``A_polynomial``.
    """

    U_part: tuple[Scalar, ...]
    V_part: tuple[Scalar, ...]
    A_coefficients: tuple[Scalar, ...]
    A_polynomial: tuple[Scalar, ...] = field(default=())

    def at(self, hbar: Scalar) -> tuple[Scalar, ...]:
        inv = div(1, hbar)
        return tuple(u + v * inv for u, v in zip(self.U_part, self.V_part))

    def scaled(self, c: Scalar) -> FlowValue:
        return FlowValue(
            tuple(u * c for u in self.U_part),
            tuple(v * c for v in self.V_part),
            tuple(f * c for f in self.A_coefficients),
            tuple(a * c for a in self.A_polynomial),
        )

    def A_function(self, q: Sequence[Scalar]) -> RationalFunction:
        result = RationalFunction.polynomial(Polynomial(self.A_polynomial))
        for f, qi in zip(self.A_coefficients, q):
            if f != 0:
                result = result + RationalFunction.simple_pole(f, qi)
        return result


def t_poly(alpha: int | None, i: int, x: Scalar, ext: ExtendedPoint) -> Scalar:
    """The polynomial ``T_i`` of the finite pole ``alpha`` (or of infinity when ``None``)."""
    orders = ext.orders
    if alpha is None:
        m = orders.m_infinity
        a = ext.base.a_inf
        if not 0 <= i <= 2 * m - 7:
            raise InvalidInput(f"index {i} out of range at infinity")
        total: Scalar = (2 * i - 2 * m + 7) * x ** (2 * m - i - 7)
        for k in range(i + 2, 2 * m - 6):
            total = total + (2 * i - k + 2) * x ** (k - i - 2) * a[k]
        return total
    m = orders.m_finite[alpha]
    a = ext.base.a_fin[alpha]
    if not 1 <= i <= 2 * m - 1:
        raise InvalidInput(f"index {i} out of range at a finite pole")
    total = 0
    for k in range(i, 2 * m):
        total = total + div((2 * i - k - 2) * a[k - 1], x ** (k - i + 2))
    return total


def _zeros(n: int) -> list[Scalar]:
    return [0] * n


def isopotential_flows(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar | None = None) -> list[FlowValue]:
    """``d/da - hbar**-1 sum_I (dp_I/da) d/dv_I`` for each coordinate entering ``N``."""
    dp = ext.moduli_dpdtheta()
    out = []
    for alpha, i in orders.lower_coordinates():
        col = orders.a_index(alpha, i)
        u = _zeros(ext.dim)
        u[col] = 1
        v = _zeros(ext.dim)
        for k in range(ext.n):
            v[ext.v_index(k)] = -dp[k][col]
        out.append(FlowValue(tuple(u), tuple(v), tuple(_zeros(ext.n))))
    return out


def _moduli_velocity(orders: PoleOrders, ext: ExtendedPoint, qi: Scalar) -> list[Scalar]:
    """The ``a`` and ``w`` components of ``L_I`` (all of order ``hbar**0``)."""
    m_inf = orders.m_infinity
    vel = [t_poly(None, i, qi, ext) if i > m_inf - 4 else 0 for i in range(orders.num_a_inf)]
    for alpha, (m, w) in enumerate(zip(orders.m_finite, ext.base.w)):
        vel += [t_poly(alpha, i, qi - w, ext) if i > m else 0 for i in range(1, 2 * m)]
        vel.append(div(1, qi - w))
    return vel


def _q0_variation(ext: ExtendedPoint, vel: Sequence[Scalar], x: Scalar) -> Scalar:
    """Derivative of ``Q0(x)`` along the moduli velocity ``vel``."""
    orders = ext.orders
    total: Scalar = 0
    for i in range(orders.num_a_inf):
        if vel[i] != 0:
            total = total + vel[i] * x**i
    pos = orders.num_a_inf
    for w, a in zip(ext.base.w, ext.base.a_fin):
        for k in range(1, len(a) + 1):
            if vel[pos + k - 1] != 0:
                total = total + div(vel[pos + k - 1], (x - w) ** k)
        dw = vel[pos + len(a)]
        for k in range(1, len(a) + 1):
            total = total + div(dw * k * a[k - 1], (x - w) ** (k + 1))
        pos += len(a) + 1
    return total


def main_flows(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar | None = None) -> list[FlowValue]:
    """The generators ``L_I = U_I + V_I/hbar`` with ``A = 1/(x - q_I)``."""
    n = ext.n
    q, v = ext.q, ext.v
    p = ext.p_values()
    triple = ext.potentials()
    q0p = triple.Q0.derivative()
    r, s = interpolation_parts(orders, ext, p)
    r_prime = r.derivative()
    s_prime = s.derivative()
    out = []
    for i in range(n):
        qi = q[i]
        vel = _moduli_velocity(orders, ext, qi)
        u = list(vel) + _zeros(2 * n)
        vv = _zeros(2 * n) + _zeros(2 * n)
        for k in range(n):
            if k == i:
                u[ext.q_index(k)] = -2 * v[k]
                vv[ext.q_index(k)] = -2 * p[k]
            else:
                u[ext.q_index(k)] = -div(1, q[k] - qi)
        for k in range(n):
            qk, pk = q[k], p[k]
            dq_u = u[ext.q_index(k)]
            dp_u = div(q0p(qk) * dq_u + _q0_variation(ext, vel, qk), 2 * pk)
            if k == i:
                u_val: Scalar = -s_prime(qi)
                v_val: Scalar = -r_prime(qi) - dp_u
                for j in range(n):
                    if j != i:
                        d = qi - q[j]
                        u_val = u_val + div(3, 2 * d**3) + div(v[j], d * d)
                        v_val = v_val + div(p[j], d * d)
            else:
                d = qk - qi
                u_val = -div(v[k], d * d) + div(3, 2 * d**3)
                v_val = -dp_u - div(pk, d * d)
            u[ext.v_index(k)] = u_val
            vv[ext.v_index(k)] = v_val
        coeffs = _zeros(n)
        coeffs[i] = 1
        out.append(FlowValue(tuple(u), tuple(vv), tuple(coeffs)))
    return out


def all_flows(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar | None = None) -> list[FlowValue]:
    """Isopotential generators followed by the main generators."""
    return isopotential_flows(orders, ext, hbar) + main_flows(orders, ext, hbar)


def model_derivative_Q(model: FlowModel, hbar: Scalar, tangent: Sequence[Scalar]) -> RationalFunction:
    """Jet derivative of ``Q`` along ``tangent`` for any point model."""
    coords = model.coordinates()
    if len(tangent) != len(coords):
        raise InvalidInput("tangent length does not match the coordinates")
    lifted = model.with_coordinates([Jet(c, t) for c, t in zip(coords, tangent)])
    return lifted.potentials().assemble(hbar).tangent_part()


def directional_derivative_Q(
    orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, tangent: Sequence[Scalar]
) -> RationalFunction:
    """``D_t Q`` by lifting the coordinates to jets (the ``p_I`` follow automatically)."""
    return model_derivative_Q(ext, hbar, tangent)


def model_flatness_residual(model: FlowModel, hbar: Scalar, flow: FlowValue) -> float:
    q = model.potentials().assemble(hbar)
    tangent = flow.at(hbar)
    dq = model_derivative_Q(model, hbar, tangent)
    a = flow.A_function(model.q_values())
    a1 = a.derivative()
    a3 = a1.derivative().derivative()
    terms = [dq * -2, -a3, q * a1 * 4, q.derivative() * a * 2]
    # Q times the flow's size sets the scale when A = 0 and D_L Q cancels.
    reference = q * max(magnitude(t) for t in tangent)
    _, nums = common_numerators(terms + [reference])
    total = Polynomial()
    for num in nums[:-1]:
        total = total + num
    if total.is_zero():
        return 0.0
    scale = max(num.max_abs() for num in nums)
    return total.max_abs() / scale if scale else float("inf")


def flatness_residual(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, flow: FlowValue) -> float:
    """Relative size of ``-2 D_L Q - (A''' - 4 Q A' - 2 Q' A)`` over a common denominator."""
    return model_flatness_residual(ext, hbar, flow)


@dataclass(frozen=True)
class IndependenceReport:
    det_N: Scalar
    rank: int
    parity_ok: bool


def flow_matrix(flows: Sequence[FlowValue]) -> linalg.Matrix:
    """Rows ``U_a`` followed by rows ``V_a``."""
    return tuple(f.U_part for f in flows) + tuple(f.V_part for f in flows)


def parity_holds(flows: Sequence[FlowValue], flipped: Sequence[FlowValue], tol: float = 1e-12) -> bool:
    """``U`` parts invariant and ``V`` parts negated under ``p -> -p``."""
    for f, g in zip(flows, flipped):
        for a, b in zip(f.U_part, g.U_part):
            if a != b and magnitude(a - b) > tol * (1 + magnitude(a)):
                return False
        for a, b in zip(f.V_part, g.V_part):
            if a != -b and magnitude(a + b) > tol * (1 + magnitude(a)):
                return False
    return True


def independence_report(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar | None = None) -> IndependenceReport:
    """``det N``, the rank of ``{U_a, V_a}`` and the involution parity of the generators."""
    det_n = linalg.det(lower_coordinate_matrix(orders, ext.base.w, ext.q))
    flows = all_flows(orders, ext)
    rank = linalg.rank(flow_matrix(flows))
    parity = parity_holds(flows, all_flows(orders, ext.flipped()))
    return IndependenceReport(det_n, rank, parity)
