"""Four simple poles: the Painleve VI example.

Poles sit at ``0, 1, w`` and infinity and the moduli coordinates are
``(a, w)`` with ``Q0 = a(w-1)/x - a w/(x-1) + a/(x-w)``.  The fibre adds
``(q, v)`` with ``p = eps sqrt(Q0(q))``.  A :class:`PviPoint` implements the
same point interface as :class:`~isohk.moduli.ExtendedPoint`, so the generic
flatness, residue and frame machinery applies unchanged.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .algebra.poly import Polynomial
from .algebra.ratfunc import RationalFunction, common_numerators
from .algebra.scalar import Jet, Scalar, all_exact, div, magnitude, sqrt, tangent_part, to_float
from .algebra.series import INFINITY, ExpansionSite
from .errors import InvalidInput, InvalidPoint, PrecisionFailure, SingularConfiguration
from .flows import FlowValue
from .metric import MetricMatrix, QuaternionFrame, assemble_metric, build_frame
from .moduli import PotentialTriple
from .twoforms import OmegaParts, model_omega_parts

LABELS = ("a", "w", "q", "v")


def _simple(c: Scalar, root: Scalar) -> RationalFunction:
    return RationalFunction.simple_pole(c, root)


def _pole_frame(w: Scalar) -> tuple[tuple[Scalar, int], ...]:
    return ((0, 1), (1, 1), (w, 1))


@dataclass(frozen=True)
class PviPoint:
    """``(a, w, q, v)`` with sheet sign ``eps`` for ``p``."""

    a: Scalar
    w: Scalar
    q: Scalar
    v: Scalar
    eps: int = 1

    n = 1
    dim = 4

    @classmethod
    def build(cls, a: Scalar, w: Scalar, q: Scalar, v: Scalar, eps: int = 1) -> PviPoint:
        pt = cls(a, w, q, v, int(eps))
        pt.validate()
        return pt

    def validate(self) -> None:
        if self.eps not in (1, -1):
            raise InvalidPoint("eps must be +1 or -1")
        if self.a * self.w * (self.w - 1) == 0:
            raise InvalidPoint("need a w (w - 1) != 0")
        if self.q in (0, 1) or self.q == self.w:
            raise InvalidPoint("q must avoid the poles 0, 1, w")
        if self.Q0()(self.q) == 0:
            raise InvalidPoint("Q0 vanishes at q")

    def labels(self) -> list[str]:
        return list(LABELS)

    def coordinates(self) -> tuple[Scalar, ...]:
        return (self.a, self.w, self.q, self.v)

    def with_coordinates(self, values: Sequence[Scalar]) -> PviPoint:
        a, w, q, v = values
        return PviPoint(a, w, q, v, self.eps)

    def continued(self, values: Sequence[Scalar]) -> PviPoint:
        moved = self.with_coordinates(values)
        p_old, p_new = self.p, moved.p
        if magnitude(p_new - p_old) > magnitude(p_new + p_old):
            return moved.flipped()
        return moved

    def flipped(self) -> PviPoint:
        return PviPoint(self.a, self.w, self.q, self.v, -self.eps)

    def to_float(self) -> PviPoint:
        return self.with_coordinates([to_float(c) for c in self.coordinates()])

    def is_exact(self) -> bool:
        return all_exact(self.coordinates()) and all_exact(self.p_values())

    def q_index(self, i: int) -> int:
        return 2

    def v_index(self, i: int) -> int:
        return 3

    def q_values(self) -> tuple[Scalar, ...]:
        return (self.q,)

    def v_values(self) -> tuple[Scalar, ...]:
        return (self.v,)

    def Q0(self) -> RationalFunction:
        a, w = self.a, self.w
        return _simple(a * (w - 1), 0) + _simple(-a * w, 1) + _simple(a, w)

    @property
    def p(self) -> Scalar:
        return self.eps * sqrt(self.Q0()(self.q))

    def p_values(self) -> tuple[Scalar, ...]:
        return (self.p,)

    def R(self, p: Scalar | None = None) -> RationalFunction:
        p = self.p if p is None else p
        q, v, w = self.q, self.v, self.w
        num = Polynomial(
            [2 * p * q * q - p * q * (1 + w) + 2 * p * v * q * (q - 1) * (q - w), p * ((1 + w) - q), -p]
        )
        return RationalFunction.from_poles(num, _pole_frame(w))

    def S(self) -> RationalFunction:
        q, v, w = self.q, self.v, self.w
        c = Fraction(3, 4)
        num = Polynomial(
            [v * v * q * (q - 1) * (q - w) + q * (v * (2 * q - w - 1) + c), v * (1 + w - q) - c, -v]
        )
        return RationalFunction.from_poles(num, _pole_frame(w))

    def potentials(self) -> PotentialTriple:
        p = self.p
        q1 = _simple(p, self.q) + self.R(p)
        q2 = RationalFunction.simple_pole(Fraction(3, 4), self.q, 2) + _simple(self.v, self.q) + self.S()
        return PotentialTriple(self.Q0(), q1, q2)

    def pole_sites(self) -> list[ExpansionSite]:
        return [ExpansionSite(0, 2), ExpansionSite(1, 2), ExpansionSite(self.w, 2), ExpansionSite(INFINITY, 2)]

    def A_w(self) -> Scalar:
        """``A(w) = w(w - 1)/(w - q)``."""
        if self.w * (self.w - 1) == 0:
            raise SingularConfiguration("A(w) vanishes")
        return div(self.w * (self.w - 1), self.w - self.q)

    def kappa(self) -> Scalar:
        q, v = self.q, self.v
        return 2 * v * q * (q - 1) + 2 * q - 1

    def dp(self) -> tuple[Scalar, Scalar]:
        """``(dp/da, dp/dw)`` from ``p**2 = Q0(q)``."""
        a, w, q, p = self.a, self.w, self.q, self.p
        dq0_dw = a * (div(1, q) - div(1, q - 1) + div(1, (q - w) ** 2))
        return div(p, 2 * a), div(dq0_dw, 2 * p)

    def Z(self) -> Scalar:
        """The ``hbar**-1`` coefficient of ``A(w) dv`` along the main generator."""
        q, p = self.q, self.p
        kappa = self.kappa()
        r_prime = self.R(p).derivative()(q)
        q0_prime = self.Q0().derivative()(q)
        return q * (q - 1) * r_prime - p - div(q0_prime * kappa, 2 * p) - self.A_w() * self.dp()[1]


def pvi_potentials(pt: PviPoint, hbar: Scalar | None = None) -> PotentialTriple:
    """``(Q0, Q1, Q2)`` for the four-pole family; ``R(q) = 2pv`` and ``S(q) = v**2`` are asserted."""
    p = pt.p
    if pt.R(p)(pt.q) != 2 * p * pt.v and magnitude(pt.R(p)(pt.q) - 2 * p * pt.v) > 1e-10 * (1 + magnitude(p * pt.v)):
        raise InvalidPoint("R(q) != 2 p v")
    if pt.S()(pt.q) != pt.v * pt.v and magnitude(pt.S()(pt.q) - pt.v * pt.v) > 1e-10 * (1 + magnitude(pt.v) ** 2):
        raise InvalidPoint("S(q) != v**2")
    return pt.potentials()


def pvi_flows(pt: PviPoint, hbar: Scalar | None = None) -> tuple[FlowValue, FlowValue]:
    """The isopotential generator ``U`` and the Painleve generator ``V`` (``dw = 1``).

    ``V`` solves the flatness equation with ``A(x) = -x(x-1)/((x-q) A(w))``,
    stored as ``c(x + q - 1) + c q(q-1)/(x-q)`` with ``c = -1/A(w)``.
    """
    q, v, p = pt.q, pt.v, pt.p
    a_w = pt.A_w()
    if a_w == 0:
        raise SingularConfiguration("A(w) vanishes")
    dpa, _ = pt.dp()
    u_flow = FlowValue((1, 0, 0, 0), (0, 0, 0, -dpa), (0,))
    s_prime = pt.S().derivative()(q)
    u_part = (0, 1, div(pt.kappa(), a_w), div(q * (q - 1) * s_prime - v, a_w))
    v_part = (0, 0, div(2 * p * q * (q - 1), a_w), div(pt.Z(), a_w))
    c = div(-1, a_w)
    v_flow = FlowValue(u_part, v_part, (c * q * (q - 1),), (c * (q - 1), c))
    return u_flow, v_flow


def pvi_metric(pt: PviPoint) -> MetricMatrix:
    """The closed-form metric in the basis ``(da, dw, dq, dv)``; ``a.b`` is the symmetrised product."""
    q, v, p = pt.q, pt.v, pt.p
    a_w = pt.A_w()
    kappa = pt.kappa()
    dpa_inv = div(1, pt.dp()[0])
    z = pt.Z()
    pqq = 2 * p * q * (q - 1)
    s_prime = pt.S().derivative()(q)
    g_aw = div(kappa, 2 * pqq)
    g_aq = div(-a_w, 2 * pqq)
    g_wv = -dpa_inv * Fraction(1, 2)
    g_ww = dpa_inv * (div(q * (q - 1) * s_prime - v, a_w) - div(kappa * z, pqq * a_w))
    g_wq = dpa_inv * div(z, pqq) * Fraction(1, 2)
    rows = (
        (0, g_aw, g_aq, 0),
        (g_aw, g_ww, g_wq, g_wv),
        (g_aq, g_wq, 0, 0),
        (0, g_wv, 0, 0),
    )
    return MetricMatrix(rows, 1, LABELS)


# The reduced residue sum gives Omega_-(d/da, d/dw) = 1 at every point, so the
# forms carry 2 pi i da^dw.  Dividing by 4 pi i gives Omega_- = da^dw / 2, the
# normalisation under which the frame-assembled metric is the closed form.
PVI_FORM_SCALE = 1 / (4j * math.pi)
# The same normalisation on reduced entries (the 2 pi i factor cancels).
PVI_REDUCED_SCALE = Fraction(1, 2)


@dataclass(frozen=True)
class PviStructure:
    """Forms, frame and assembled metric, normalised so that ``Omega_- = da^dw / 2``."""

    point: PviPoint
    parts: OmegaParts
    frame: QuaternionFrame
    metric: MetricMatrix

    def omega(self, j: int, k: int) -> Scalar:
        """Normalised ``Omega_-`` entry, exact whenever the point is."""
        return self.parts.minus[j, k] * PVI_REDUCED_SCALE

    def omega_wa(self) -> Scalar:
        """``Omega_-(d/dw, d/da)``."""
        return self.omega(1, 0)


def pvi_structure(pt: PviPoint) -> PviStructure:
    """Residue forms, quaternion frame and the metric ``-Omega_I(I., .)`` for the four-pole family.

    Reduced entries are kept; ``parts`` carries the normalised factors.
    """
    parts = model_omega_parts(pt).rescaled(PVI_FORM_SCALE)
    frame = build_frame(list(pvi_flows(pt)))
    metric = assemble_metric(frame, parts.omega_I)
    return PviStructure(pt, parts, frame, metric)


def metric_mismatch(pt: PviPoint) -> float:
    """Largest entrywise gap between the closed form and the frame-assembled metric, relative to ``max |g|``."""
    closed = pvi_metric(pt).full()
    assembled = pvi_structure(pt).metric.full()
    scale = max(float(np.max(np.abs(closed))), 1e-300)
    return float(np.max(np.abs(closed - assembled))) / scale


def euler_norm(pt: PviPoint) -> tuple[Scalar, complex]:
    """``g(E, E)`` for ``E = 2a d/da`` from the closed form and from the frame-assembled metric."""
    e = (2 * pt.a, 0, 0, 0)
    closed = pvi_metric(pt)
    exact = sum(e[j] * closed[j, k] * e[k] for j in range(4) for k in range(4))
    vec = np.array([complex(x) for x in e])
    assembled = complex(vec @ pvi_structure(pt).metric.full() @ vec)
    return exact, assembled


def pvi_metric_field(pt: PviPoint) -> Callable[[Sequence[Scalar]], np.ndarray]:
    """Coordinates ``(a, w, q, v)`` to the closed-form metric, continuing ``p`` from ``pt``.

    Complex input gives a complex array; mpmath input gives an object array at the current precision.
    """
    base = pt.to_float()

    def field(x: Sequence[Scalar]) -> np.ndarray:
        moved = base.continued(list(x))
        if any(isinstance(c, (mpmath.mpc, mpmath.mpf)) for c in x):
            return np.array(pvi_metric(moved).entries, dtype=object)
        return pvi_metric(moved).full()

    return field


# Painleve VI with (k_inf, k_0, k_1, k_t) = (1, 1, 1, 1)


def pvi_rhs(q: Scalar, dq: Scalar, w: Scalar) -> Scalar:
    """Right-hand side of the Painleve VI equation for ``q''(w)``."""
    first = Fraction(1, 2) * (div(1, q) + div(1, q - 1) + div(1, q - w)) * dq * dq
    second = (div(1, w) + div(1, w - 1) + div(1, q - w)) * dq
    third = div(q * (q - 1) * (q - w), 2 * w * w * (w - 1) ** 2) * (1 - div(w, q * q) + div(w - 1, (q - 1) ** 2))
    return first - second + third


def flow_velocity(pt: PviPoint, hbar: Scalar = 1) -> tuple[Scalar, ...]:
    """``V`` at ``hbar`` with ``dw = 1``: ``(0, 1, dq/dw, dv/dw)``."""
    return pvi_flows(pt)[1].at(hbar)


def pvi_flow_residual(pt: PviPoint, hbar: Scalar = 1) -> Scalar:
    """``q'' - RHS(q', q, w)`` along ``V``, with ``q''`` the jet derivative of ``dq/dw`` along ``V``.

    Exact when the point is.
    """
    vel = flow_velocity(pt, hbar)
    lifted = pt.with_coordinates([Jet(c, t) for c, t in zip(pt.coordinates(), vel)])
    ddq = tangent_part(flow_velocity(lifted, hbar)[2])
    return ddq - pvi_rhs(pt.q, vel[2], pt.w)


@dataclass(frozen=True)
class PviTrajectory:
    """Samples of an integrated flow line and the Painleve VI residual along it.

    ``residual`` compares a five-point difference of ``q'(w)`` (``q'`` read
    from the generator at dense-output states) with the displayed
    right-hand side; ``jet_residual`` is the pointwise jet residual at the
    same samples; ``p_drift`` is ``max |p**2 - Q0(q)|`` relative to ``|p|**2``.
    ``end`` is the state ``(q, v, p)`` at ``w_end``.
    """

    w: tuple[complex, ...]
    q: tuple[complex, ...]
    v: tuple[complex, ...]
    p: tuple[complex, ...]
    residual: float
    jet_residual: float
    p_drift: float
    evaluations: int
    end: tuple[complex, complex, complex]


SINGULAR_DISTANCE = 1e-3


def _point_near(a: Scalar, w: float, q: complex, v: complex, p: complex) -> PviPoint:
    pt = PviPoint(a, w, q, v, 1)
    return pt if abs(pt.p - p) <= abs(pt.p + p) else pt.flipped()


def _state_rhs(a: Scalar, hbar: Scalar, path: Callable[[float], tuple[complex, complex]]) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        w, dw_ds = path(s)
        q, v, p = (complex(c) for c in y)
        pt = _point_near(a, w, q, v, p)
        _, _, dq, dv = flow_velocity(pt, hbar)
        dq0_dw = a * (1 / q - 1 / (q - 1) + 1 / (q - w) ** 2)
        dp = (complex(pt.Q0().derivative()(q)) * dq + complex(dq0_dw)) / (2 * p)
        return np.array([complex(dq), complex(dv), dp]) * dw_ds

    return rhs


def _guard_events(path: Callable[[float], tuple[complex, complex]]) -> list[Callable[[float, np.ndarray], float]]:
    def near(fn: Callable[[complex, complex, complex], complex]) -> Callable[[float, np.ndarray], float]:
        def event(s: float, y: np.ndarray) -> float:
            return abs(fn(path(s)[0], complex(y[0]), complex(y[2]))) - SINGULAR_DISTANCE

        event.terminal = True  # type: ignore[attr-defined]
        return event

    return [
        near(lambda w, q, p: q),
        near(lambda w, q, p: q - 1),
        near(lambda w, q, p: q - w),
        near(lambda w, q, p: p),
    ]


def w_path(w0: complex, w1: complex, detour: float = 0.0) -> Callable[[float], tuple[complex, complex]]:
    """``s in [0, 1]`` to ``(w(s), w'(s))``: the segment bent by ``i detour (w1 - w0) sin(pi s)``."""
    span = complex(w1) - complex(w0)

    def path(s: float) -> tuple[complex, complex]:
        w = complex(w0) + span * (s + 1j * detour * math.sin(math.pi * s))
        dw = span * (1 + 1j * detour * math.pi * math.cos(math.pi * s))
        return w, dw

    return path


def pvi_integrate(
    init: PviPoint,
    hbar: Scalar = 1,
    w_end: complex = 3.0,
    tolerance: float = 1e-10,
    detour: float = 0.0,
    samples: int = 41,
    stencil: float = 1e-4,
) -> PviTrajectory:
    """Integrate ``V`` (``dw = 1``, ``a`` fixed) from ``init.w`` to ``w_end`` with DOP853.

    ``w`` follows :func:`w_path`; ``detour = 0`` is the straight segment and
    a nonzero ``detour`` bends it into the complex plane around collisions.
    The state is ``(q, v, p)``; ``p`` moves by
    ``dp/dw = (Q0'(q) q' + dQ0/dw(q))/(2p)`` and picks the sheet of each
    intermediate point.  Approaching ``q in {0, 1, w}`` or ``p = 0`` within
    ``1e-3`` raises :class:`SingularConfiguration`.
    """
    start = init.to_float()
    a = start.a
    path = w_path(complex(start.w), complex(w_end), detour)
    rhs = _state_rhs(a, hbar, path)
    y0 = np.array([complex(start.q), complex(start.v), complex(start.p)])
    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        y0,
        method="DOP853",
        rtol=tolerance,
        atol=tolerance * 1e-2,
        dense_output=True,
        events=_guard_events(path),
    )
    if sol.status == 1:
        w_stop = path(float(sol.t[-1]))[0]
        raise SingularConfiguration(f"trajectory comes within {SINGULAR_DISTANCE} of a singular value at w = {w_stop}")
    if sol.status != 0:
        raise PrecisionFailure(f"integration failed: {sol.message}")

    def state(s: float) -> PviPoint:
        q, v, p = (complex(c) for c in sol.sol(s))
        return _point_near(a, path(s)[0], q, v, p)

    def slope(s: float) -> complex:
        return complex(flow_velocity(state(s), hbar)[2])

    h = stencil
    grid = np.linspace(2 * h, 1 - 2 * h, samples)
    residual = jet = drift = 0.0
    ws, qs, vs, ps = [], [], [], []
    for s in grid:
        w, dw_ds = path(float(s))
        pt = state(float(s))
        ws.append(w)
        qs.append(complex(pt.q))
        vs.append(complex(pt.v))
        ps.append(complex(pt.p))
        ddq_ds = (-slope(s + 2 * h) + 8 * slope(s + h) - 8 * slope(s - h) + slope(s - 2 * h)) / (12 * h)
        target = complex(pvi_rhs(pt.q, slope(s), w))
        scale = 1 + abs(target)
        residual = max(residual, abs(ddq_ds / dw_ds - target) / scale)
        jet = max(jet, magnitude(pvi_flow_residual(pt, hbar)) / scale)
        q_state, _, p_state = (complex(c) for c in sol.sol(s))
        drift = max(drift, abs(p_state**2 - complex(pt.Q0()(q_state))) / max(abs(p_state) ** 2, 1e-300))
    end = tuple(complex(c) for c in sol.sol(1.0))
    return PviTrajectory(tuple(ws), tuple(qs), tuple(vs), tuple(ps), residual, jet, drift, int(sol.nfev), end)


# Algebraic solutions (q^2 - w)(q^2 - 2q + w)(q^2 - 2qw + w) = 0

ALGEBRAIC_FACTORS: tuple[tuple[str, Callable[[Scalar, Scalar], tuple[Scalar, ...]]], ...] = (
    # (name, (f, f_q, f_w, f_qq, f_qw, f_ww) at (q, w))
    ("q^2 - w", lambda q, w: (q * q - w, 2 * q, -1, 2, 0, 0)),
    ("q^2 - 2q + w", lambda q, w: (q * q - 2 * q + w, 2 * q - 2, 1, 2, 0, 0)),
    ("q^2 - 2qw + w", lambda q, w: (q * q - 2 * q * w + w, 2 * q - 2 * w, 1 - 2 * q, 2, -2, 0)),
)


def _factor_roots(name: str, w: Scalar) -> tuple[Scalar, Scalar]:
    if name == "q^2 - w":
        r = sqrt(w)
        return r, -r
    if name == "q^2 - 2q + w":
        r = sqrt(1 - w)
        return 1 + r, 1 - r
    r = sqrt(w * w - w)
    return w + r, w - r


@dataclass(frozen=True)
class BranchResidual:
    factor: str
    q: Scalar
    residual: Scalar | None
    note: str = ""

    @property
    def skipped(self) -> bool:
        return self.residual is None


def branch_residual(f: Callable[[Scalar, Scalar], tuple[Scalar, ...]], q: Scalar, w: Scalar) -> Scalar | None:
    """PVI residual of the branch of ``f(q, w) = 0`` through ``q``; ``None`` at a branch point."""
    _, fq, fw, fqq, fqw, fww = f(q, w)
    if fq == 0 or magnitude(fq) < 1e-12:
        return None
    dq = -div(fw, fq)
    ddq = -div(fww + 2 * fqw * dq + fqq * dq * dq, fq)
    return ddq - pvi_rhs(q, dq, w)


def pvi_algebraic_check(w: Scalar) -> list[BranchResidual]:
    """Residuals of both local branches of every algebraic-solution factor at ``w``.

    Branches through a branch point, or through the singular values ``q in {0, 1, w}``, are skipped.
    """
    if w == 0 or w == 1:
        raise InvalidInput("w must avoid 0 and 1")
    out = []
    for name, f in ALGEBRAIC_FACTORS:
        for q in _factor_roots(name, w):
            if q == 0 or q == 1 or q == w:
                out.append(BranchResidual(name, q, None, "singular value of q"))
                continue
            res = branch_residual(f, q, w)
            out.append(BranchResidual(name, q, res, "" if res is not None else "branch point"))
    return out


# Killing vector K = a w (w - 1)/(2 p q (q - 1)(q - w)) d/dv


def killing_component(pt: PviPoint) -> Scalar:
    q = pt.q
    return div(pt.a * pt.w * (pt.w - 1), 2 * pt.p * q * (q - 1) * (q - pt.w))


@dataclass(frozen=True)
class KillingReport:
    """``D_K Q1 - Q0`` (``exact`` if it vanishes identically) and the Lie derivative of ``g`` along ``K``."""

    exact: bool
    q1_residual: float
    lie_residual: float


def killing_q1_residual(pt: PviPoint) -> tuple[bool, float]:
    k = killing_component(pt)
    lifted = pt.with_coordinates([pt.a, pt.w, pt.q, Jet(pt.v, k)])
    dq1 = lifted.potentials().Q1.tangent_part()
    diff = dq1 - pt.Q0()
    _, nums = common_numerators([diff, pt.Q0()])
    if nums[0].is_zero():
        return True, 0.0
    return False, nums[0].max_abs() / max(nums[1].max_abs(), 1e-300)


def lie_derivative_residual(pt: PviPoint, step: float = 1e-5) -> float:
    """``max |L_K g|`` relative to ``max |g|`` by central differences of the closed form."""
    base = pt.to_float()
    x0 = np.array([complex(c) for c in base.coordinates()])
    field = pvi_metric_field(base)

    def kvec(x: np.ndarray) -> np.ndarray:
        return np.array([0, 0, 0, complex(killing_component(base.continued(list(x))))])

    g0 = field(x0)
    k0 = kvec(x0)
    dg = []
    dk = []
    for j in range(4):
        h = step * (1 + abs(x0[j]))
        e = np.zeros(4, dtype=complex)
        e[j] = h
        dg.append((field(x0 + e) - field(x0 - e)) / (2 * h))
        dk.append((kvec(x0 + e) - kvec(x0 - e)) / (2 * h))
    dg_arr = np.array(dg)  # dg[k, i, j] = d_k g_ij
    dk_arr = np.array(dk)  # dk[i, k] = d_i K^k
    lie = np.einsum("k,kij->ij", k0, dg_arr) + np.einsum("kj,ik->ij", g0, dk_arr) + np.einsum("ik,jk->ij", g0, dk_arr)
    return float(np.max(np.abs(lie))) / max(float(np.max(np.abs(g0))), 1e-300)


def pvi_killing_check(pt: PviPoint, step: float = 1e-5) -> KillingReport:
    exact, q1 = killing_q1_residual(pt)
    return KillingReport(exact, q1, lie_derivative_residual(pt, step))


# Points


def point_with_p(w: Scalar, q: Scalar, v: Scalar, p: Scalar) -> PviPoint:
    """The point with ``Q0(q) = p**2``: ``a`` is solved from ``p`` (``Q0`` is linear in ``a``), so rational input stays exact."""
    shape = div(w - 1, q) - div(w, q - 1) + div(1, q - w)
    if shape == 0:
        raise InvalidPoint("Q0(q) vanishes for every a")
    a = div(p * p, shape)
    pt = PviPoint.build(a, w, q, v, 1)
    if pt.p != p and magnitude(pt.p - p) > magnitude(pt.p + p):
        pt = pt.flipped()
    return pt


def random_pvi_point(seed: int | random.Random, height: int = 6, max_tries: int = 1000) -> PviPoint:
    """A seeded exact point with rational ``p`` and ``A(w) != 0``."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)

    def rational(nonzero: bool = False) -> Fraction:
        while True:
            x = Fraction(rng.randint(-height * height, height * height), rng.randint(1, height))
            if x != 0 or not nonzero:
                return x

    for _ in range(max_tries):
        w, q = rational(True), rational(True)
        if w == 1 or q == 1 or q == w:
            continue
        try:
            pt = point_with_p(w, q, rational(), rational(True))
            pvi_flows(pt)
            if pt.dp()[0] == 0 or pt.kappa() == 0:
                continue
        except (InvalidPoint, SingularConfiguration, ZeroDivisionError):
            continue
        return pt
    raise InvalidPoint("no valid point found")
