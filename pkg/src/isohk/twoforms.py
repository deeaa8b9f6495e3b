"""Residue formulas for the two-forms on ``X`` and on ``M``.

Every entry is computed as a sum of local pairings ``Res(d^-1(alpha) beta)``
of derivatives of the tautological forms.  Matrices are stored *reduced*,
i.e. divided by the constant in front of the residue sum, so that exact
inputs give exact entries; :class:`TwoFormMatrix` records that constant.

For a generator ``U`` and a point model the relevant local forms are

* ``U(Psi) = U(Q) dx / (2 y)`` on ``y**2 = Q`` (full potential),
* ``U(psi) = U(Q0) dx / (2 y0)``, ``U(sigma)`` and ``U(tau)`` on ``y0**2 = Q0``,

expanded at the poles (ramified) and, for ``Psi``, at the apparent
singularities ``q_I``, whose two preimages contribute equally.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Protocol, Sequence

import mpmath
import numpy as np

from .algebra import linalg
from .algebra.ratfunc import RationalFunction
from .algebra.scalar import Jet, Scalar, all_exact, div, is_exact, magnitude, tangent_part, to_extended, to_float
from .algebra.series import (
    INFINITY,
    ExpansionSite,
    LocalOneForm,
    LocalSeries,
    radical_form,
)
from .errors import InvalidInput, PrecisionFailure, StructureViolation
from .flows import FlowValue, model_derivative_Q
from .moduli import ExtendedPoint, ModuliPoint, PoleOrders, PotentialTriple, build_Q0

TWO_PI_I = 2j * math.pi
# Residue sums at inexact points cancel heavily, so they run at this many digits.
WORK_DPS = 40


class TwoFormModel(Protocol):
    """Point interface shared by generic points and Painleve VI points."""

    @property
    def n(self) -> int: ...

    @property
    def dim(self) -> int: ...

    def coordinates(self) -> tuple[Scalar, ...]: ...

    def with_coordinates(self, values: Sequence[Scalar]) -> TwoFormModel: ...

    def continued(self, values: Sequence[Scalar]) -> TwoFormModel: ...

    def potentials(self) -> PotentialTriple: ...

    def p_values(self) -> tuple[Scalar, ...]: ...

    def q_values(self) -> tuple[Scalar, ...]: ...

    def v_values(self) -> tuple[Scalar, ...]: ...

    def q_index(self, i: int) -> int: ...

    def v_index(self, i: int) -> int: ...

    def pole_sites(self) -> list[ExpansionSite]: ...

    def labels(self) -> list[str]: ...

    def to_float(self) -> TwoFormModel: ...


@dataclass(frozen=True)
class TwoFormMatrix:
    """Antisymmetric matrix of reduced entries; the form itself is ``factor * entries``."""

    entries: linalg.Matrix
    factor: complex
    labels: tuple[str, ...]

    def __getitem__(self, jk: tuple[int, int]) -> Scalar:
        j, k = jk
        return self.entries[j][k]

    @property
    def size(self) -> int:
        return len(self.entries)

    def full(self) -> np.ndarray:
        return linalg.to_numpy(self.entries) * self.factor

    def max_abs(self) -> float:
        return linalg.max_abs(self.entries)

    def antisymmetry_residual(self) -> float:
        n = self.size
        return max(
            (magnitude(self.entries[j][k] + self.entries[k][j]) for j in range(n) for k in range(n)),
            default=0.0,
        )

    def is_exact(self) -> bool:
        return linalg.is_exact_matrix(self.entries)

    def restrict(self, indices: Sequence[int]) -> TwoFormMatrix:
        rows = tuple(tuple(self.entries[j][k] for k in indices) for j in indices)
        return TwoFormMatrix(rows, self.factor, tuple(self.labels[j] for j in indices))


@dataclass(frozen=True)
class _Derivatives:
    """Values and coordinate derivatives of the potentials and fibre data."""

    triple: PotentialTriple
    tangents: list[PotentialTriple]
    dp: list[list[Scalar]]  # dp[I][j]


def _derivatives(model: TwoFormModel) -> _Derivatives:
    coords = model.coordinates()
    dim = len(coords)
    tangents = []
    dp = [[0] * dim for _ in range(model.n)]
    for j in range(dim):
        lifted = model.with_coordinates([Jet(c, 1 if k == j else 0) for k, c in enumerate(coords)])
        t = lifted.potentials()
        tangents.append(PotentialTriple(t.Q0.tangent_part(), t.Q1.tangent_part(), t.Q2.tangent_part()))
        for i, p in enumerate(lifted.p_values()):
            dp[i][j] = tangent_part(p)
    return _Derivatives(model.potentials(), tangents, dp)


# Local forms -----------------------------------------------------------------


def _psi_numerator(base: PotentialTriple, t: PotentialTriple) -> tuple[RationalFunction, int]:
    return t.Q0 * Fraction(1, 2), 1


def _sigma_numerator(base: PotentialTriple, t: PotentialTriple) -> tuple[RationalFunction, int]:
    # U(Q1/(2 y0)) = (U(Q1) Q0 - Q1 U(Q0)/2) / (2 y0**3)
    return (t.Q1 * base.Q0 - base.Q1 * t.Q0 * Fraction(1, 2)) * Fraction(1, 2), 3


def _tau_numerator(base: PotentialTriple, t: PotentialTriple) -> tuple[RationalFunction, int]:
    # U(N/y0**3) = (U(N) Q0 - 3/2 N U(Q0)) / y0**5 with N = (4 Q0 Q2 - Q1**2)/8
    n = (base.Q0 * base.Q2 * 4 - base.Q1 * base.Q1) * Fraction(1, 8)
    dn = (t.Q0 * base.Q2 * 4 + base.Q0 * t.Q2 * 4 - base.Q1 * t.Q1 * 2) * Fraction(1, 8)
    return dn * base.Q0 - n * t.Q0 * Fraction(3, 2), 5


_KINDS = {"psi": _psi_numerator, "sigma": _sigma_numerator, "tau": _tau_numerator}


def _clean(form: LocalOneForm, tol: float = 1e-9) -> LocalOneForm:
    """Remove a rounding-level residue so the form can be integrated."""
    series = form.series
    if series.order < -1 or series.is_zero():
        return form
    res = series.coefficient(-1)
    if res == 0:
        return form
    if series.is_exact():
        raise StructureViolation(f"derivative form has nonzero residue {res}")
    if magnitude(res) > tol * max(series.max_abs(), 1.0):
        raise StructureViolation(f"derivative form has residue {res}")
    coeffs = list(series.coeffs)
    coeffs[-1 - series.valuation] = 0
    return LocalOneForm(LocalSeries(series.site, series.valuation, coeffs, series.order), form.radicand)


def _theta_forms(
    ders: _Derivatives, kind: str, site: ExpansionSite, order: int, hbar: Scalar | None = None
) -> list[LocalOneForm]:
    base = ders.triple
    out = []
    if kind == "Psi":
        q = base.assemble(hbar)
        for t in ders.tangents:
            out.append(_clean(radical_form(t.assemble(hbar) * Fraction(1, 2), q, 1, site, order)))
        return out
    make = _KINDS[kind]
    for t in ders.tangents:
        num, power = make(base, t)
        out.append(_clean(radical_form(num, base.Q0, power, site, order)))
    return out


def _pair(a: LocalOneForm, b: LocalOneForm) -> Scalar | None:
    """``Res(d^-1(a) b)``; ``None`` when the truncation is too low to decide."""
    prim = a.series.antiderivative()
    product = prim * b.series
    if product.order < -1:
        return None
    res = product.coefficient(-1)
    if a.radicand is not None and res != 0:
        res = div(res, a.radicand)
    return res


def _min_valuation(forms: Sequence[LocalOneForm]) -> int:
    return min(f.series.valuation for f in forms)


def _pairing_block(
    make_left: Callable[[int], list[LocalOneForm]],
    make_right: Callable[[int], list[LocalOneForm]] | None,
    self_check: bool = True,
    start: int = 4,
) -> list[list[Scalar]]:
    """Matrix ``Res(d^-1 L_j R_k) (+ Res(d^-1 R_j L_k))`` at one site.

    With ``make_right`` the symmetrised pairing of two families is returned.
    The truncation is raised until every product is determined through
    ``s**-1`` and then re-run five orders higher as a self-check.
    """

    def compute(order: int) -> list[list[Scalar]] | int:
        left = make_left(order)
        right = make_right(order) if make_right is not None else left
        need = -2 - min(_min_valuation(left), _min_valuation(right))
        if need > order:
            return need
        dim = len(left)
        mat: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
        for j in range(dim):
            for k in range(dim):
                val = _pair(left[j], right[k])
                if val is None:
                    return order + 2
                if make_right is not None:
                    extra = _pair(right[j], left[k])
                    if extra is None:
                        return order + 2
                    val = val + extra
                mat[j][k] = val
        return mat

    order = start
    for _ in range(20):
        result = compute(order)
        if isinstance(result, int):
            order = max(result, order + 1)
            continue
        if not self_check:
            return result
        check = compute(order + 5)
        if isinstance(check, int):
            order = max(check, order + 1)
            continue
        _compare(result, check)
        return result
    raise PrecisionFailure("truncation order did not stabilise")


def _compare(a: list[list[Scalar]], b: list[list[Scalar]], rtol: float = 1e-10) -> None:
    exact = all_exact(x for row in a for x in row) and all_exact(x for row in b for x in row)
    scale = max((magnitude(x) for row in a for x in row), default=0.0)
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            if exact:
                if x != y:
                    raise PrecisionFailure("residue changed when raising the truncation order")
            elif magnitude(x - y) > rtol * max(scale, 1e-300):
                raise PrecisionFailure("residue changed when raising the truncation order")


def _add_into(total: list[list[Scalar]], block: list[list[Scalar]], weight: Scalar = 1) -> None:
    for j, row in enumerate(block):
        for k, val in enumerate(row):
            if val != 0:
                total[j][k] = total[j][k] + (val * weight if weight != 1 else val)


def _freeze(mat: list[list[Scalar]]) -> linalg.Matrix:
    return tuple(tuple(row) for row in mat)


def _is_exact_model(model) -> bool:
    return all_exact(model.coordinates()) and all_exact(model.p_values())


def _promote(model):
    return model.with_coordinates([to_extended(c) for c in model.coordinates()])


def _demote(form: TwoFormMatrix) -> TwoFormMatrix:
    entries = tuple(tuple(complex(x) for x in row) for row in form.entries)
    return TwoFormMatrix(entries, form.factor, form.labels)


# Omega ----------------------------------------------------------------------


def model_deriv_one_form(
    model: TwoFormModel, hbar: Scalar, tangent: Sequence[Scalar], site: ExpansionSite, order: int
) -> LocalOneForm:
    dq = model_derivative_Q(model, hbar, tangent)
    q = model.potentials().assemble(hbar)
    return _clean(radical_form(dq * Fraction(1, 2), q, 1, site, order))


def deriv_one_form(
    orders: PoleOrders,
    ext: ExtendedPoint,
    hbar: Scalar,
    tangent: Sequence[Scalar],
    site: ExpansionSite,
    order: int = 4,
) -> LocalOneForm:
    """Local expansion of ``U(Psi) = U(Q) dx / (2y)``; its residue must vanish."""
    return model_deriv_one_form(ext, hbar, tangent, site, order)


def _psi_sites(model: TwoFormModel) -> list[ExpansionSite]:
    return [ExpansionSite(q, 1) for q in model.q_values()]


def model_omega_direct(model: TwoFormModel, hbar: Scalar, self_check: bool = True) -> TwoFormMatrix:
    if hbar == 0:
        raise InvalidInput("hbar must be nonzero")
    if _is_exact_model(model) and is_exact(hbar):
        return _omega_direct(model, hbar, self_check)
    with mpmath.workdps(WORK_DPS):
        return _demote(_omega_direct(_promote(model), to_extended(hbar), self_check))


def _omega_direct(model: TwoFormModel, hbar: Scalar, self_check: bool) -> TwoFormMatrix:
    ders = _derivatives(model)
    dim = model.dim
    total: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
    for site in model.pole_sites():
        block = _pairing_block(lambda o, s=site: _theta_forms(ders, "Psi", s, o, hbar), None, self_check)
        _add_into(total, block)
    for site in _psi_sites(model):
        block = _pairing_block(lambda o, s=site: _theta_forms(ders, "Psi", s, o, hbar), None, self_check)
        _add_into(total, block, 2)
    return TwoFormMatrix(_freeze(total), TWO_PI_I, tuple(model.labels()))


def omega_direct(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, self_check: bool = True) -> TwoFormMatrix:
    """``Omega(hbar)`` from residues at the poles and (doubled) at every ``q_I``."""
    return model_omega_direct(ext, hbar, self_check)


@dataclass(frozen=True)
class OmegaParts:
    """``Omega = minus/hbar**2 + i_omega_I/hbar + plus`` (``i_omega_I`` is ``i Omega_I``)."""

    minus: TwoFormMatrix
    i_omega_I: TwoFormMatrix
    plus: TwoFormMatrix

    @property
    def omega_I(self) -> TwoFormMatrix:
        """``Omega_I`` itself: the same reduced entries with the factor divided by ``i``."""
        return TwoFormMatrix(self.i_omega_I.entries, self.i_omega_I.factor / 1j, self.i_omega_I.labels)

    def rescaled(self, c: complex) -> OmegaParts:
        """All three forms multiplied by ``c`` (reduced entries unchanged)."""
        return OmegaParts(*(TwoFormMatrix(m.entries, m.factor * c, m.labels) for m in (self.minus, self.i_omega_I, self.plus)))

    def combine(self, hbar: Scalar) -> linalg.Matrix:
        h1, h2 = div(1, hbar), div(1, hbar * hbar)
        return tuple(
            tuple(a * h2 + b * h1 + c for a, b, c in zip(ra, rb, rc))
            for ra, rb, rc in zip(self.minus.entries, self.i_omega_I.entries, self.plus.entries)
        )


def _wedge(total: list[list[Scalar]], alpha: Sequence[Scalar], beta: Sequence[Scalar]) -> None:
    """Add ``alpha ^ beta``, i.e. ``alpha(e_j) beta(e_k) - alpha(e_k) beta(e_j)``."""
    dim = len(alpha)
    for j in range(dim):
        if alpha[j] == 0 and beta[j] == 0:
            continue
        for k in range(dim):
            val = alpha[j] * beta[k] - alpha[k] * beta[j]
            if val != 0:
                total[j][k] = total[j][k] + val


def model_omega_parts(model: TwoFormModel, self_check: bool = True) -> OmegaParts:
    if _is_exact_model(model):
        return _omega_parts(model, self_check)
    with mpmath.workdps(WORK_DPS):
        parts = _omega_parts(_promote(model), self_check)
        return OmegaParts(_demote(parts.minus), _demote(parts.i_omega_I), _demote(parts.plus))


def _omega_parts(model: TwoFormModel, self_check: bool) -> OmegaParts:
    ders = _derivatives(model)
    dim = model.dim
    labels = tuple(model.labels())
    minus: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
    mid: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
    plus: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
    for site in model.pole_sites():
        psi = lambda o, s=site: _theta_forms(ders, "psi", s, o)
        sigma = lambda o, s=site: _theta_forms(ders, "sigma", s, o)
        tau = lambda o, s=site: _theta_forms(ders, "tau", s, o)
        _add_into(minus, _pairing_block(psi, None, self_check))
        _add_into(mid, _pairing_block(psi, sigma, self_check))
        _add_into(plus, _pairing_block(psi, tau, self_check))
        # sigma is regular at infinity but its w-derivative is not at w_a
        _add_into(plus, _pairing_block(sigma, None, self_check))
    for i in range(model.n):
        dq = [0] * dim
        dq[model.q_index(i)] = 1
        dv = [0] * dim
        dv[model.v_index(i)] = 1
        _wedge(mid, ders.dp[i], dq)
        _wedge(plus, dv, dq)
    return OmegaParts(
        TwoFormMatrix(_freeze(minus), TWO_PI_I, labels),
        TwoFormMatrix(_freeze(mid), TWO_PI_I, labels),
        TwoFormMatrix(_freeze(plus), TWO_PI_I, labels),
    )


def omega_parts_residue(orders: PoleOrders, ext: ExtendedPoint, self_check: bool = True) -> OmegaParts:
    """``Omega_-``, ``i Omega_I`` and ``Omega_+`` from residues at the poles plus ``dp^dq``, ``dv^dq``.

    ``Omega_+`` collects every ``hbar**0`` pairing: ``(psi, tau)``, ``(tau, psi)``
    and ``(sigma, sigma)``.
    """
    return model_omega_parts(ext, self_check)


@dataclass(frozen=True)
class DecompositionFit:
    parts: OmegaParts
    coefficient_minus3: float
    coefficient_plus1: float
    scale: float


def model_omega_decompose(model: TwoFormModel, hbar_samples: Sequence[Scalar], self_check: bool = False) -> DecompositionFit:
    samples = list(hbar_samples)
    if len(samples) < 5:
        raise InvalidInput("at least five hbar samples are required")
    if any(h == 0 for h in samples) or len({complex(h) for h in samples}) != len(samples):
        raise InvalidInput("hbar samples must be distinct and nonzero")
    mats = [model_omega_direct(model, h, self_check).entries for h in samples]
    basis = [[h**e if e >= 0 else div(1, h ** (-e)) for e in (-3, -2, -1, 0, 1)] for h in samples]
    dim = model.dim
    exact = len(samples) == 5 and all_exact(x for m in mats for row in m for x in row) and all_exact(
        x for row in basis for x in row
    )
    if exact:
        rhs = [[mats[s][j][k] for j in range(dim) for k in range(dim)] for s in range(5)]
        coeffs = linalg.solve(basis, rhs)
    else:
        a = linalg.to_numpy(basis)
        if np.linalg.matrix_rank(a) < 5:
            raise InvalidInput("singular fit")
        b = np.array([[complex(to_float(mats[s][j][k])) for j in range(dim) for k in range(dim)] for s in range(len(samples))])
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        coeffs = linalg.from_numpy(sol)

    def unflatten(row: Sequence[Scalar]) -> linalg.Matrix:
        return tuple(tuple(row[j * dim + k] for k in range(dim)) for j in range(dim))

    labels = tuple(model.labels())
    parts = OmegaParts(
        TwoFormMatrix(unflatten(coeffs[1]), TWO_PI_I, labels),
        TwoFormMatrix(unflatten(coeffs[2]), TWO_PI_I, labels),
        TwoFormMatrix(unflatten(coeffs[3]), TWO_PI_I, labels),
    )
    scale = max(linalg.max_abs(m) for m in mats)
    return DecompositionFit(
        parts,
        max(magnitude(x) for x in coeffs[0]),
        max(magnitude(x) for x in coeffs[4]),
        scale,
    )


def omega_decompose(orders: PoleOrders, ext: ExtendedPoint, hbar_samples: Sequence[Scalar]) -> DecompositionFit:
    """Fit ``Omega(hbar)`` on ``{hbar**-3, ..., hbar}``; the outer coefficients must vanish."""
    return model_omega_decompose(ext, hbar_samples)


# omega on M -----------------------------------------------------------------


@dataclass(frozen=True)
class _BaseModel:
    """A moduli point seen as a model with no fibre coordinates."""

    point: ModuliPoint
    n = 0

    def coordinates(self) -> tuple[Scalar, ...]:
        return self.point.coordinates()

    def with_coordinates(self, values: Sequence[Scalar]) -> _BaseModel:
        return _BaseModel(ModuliPoint.from_coordinates(self.point.orders, values))

    def potentials(self) -> PotentialTriple:
        q0 = build_Q0(self.point.orders, self.point)
        zero = RationalFunction.constant(0)
        return PotentialTriple(q0, zero, zero)

    def p_values(self) -> tuple[Scalar, ...]:
        return ()


def omega_M(orders: PoleOrders, pt: ModuliPoint, check_pattern: bool = True, self_check: bool = True) -> TwoFormMatrix:
    """``omega`` on ``M`` by residues of ``d^-1 U(psi) V(psi)`` at the poles.

    With the convention ``a^(a)_{2 m_a} := w_a`` the block of a finite pole
    vanishes for ``i + j <= 2 m_a`` and is nonzero on ``i + j = 2 m_a + 1``;
    blocks of distinct finite poles vanish.
    """
    model = _BaseModel(pt)
    if all_exact(pt.coordinates()):
        omega = _omega_M(orders, model, self_check)
    else:
        with mpmath.workdps(WORK_DPS):
            omega = _demote(_omega_M(orders, _promote(model), self_check))
    if check_pattern:
        check_omega_pattern(orders, omega)
    return omega


def _omega_M(orders: PoleOrders, model: _BaseModel, self_check: bool) -> TwoFormMatrix:
    ders = _derivatives(model)
    dim = orders.dim_M
    total: list[list[Scalar]] = [[0] * dim for _ in range(dim)]
    sites = [ExpansionSite(w, 2) for w in model.point.w] + [ExpansionSite(INFINITY, 2)]
    for site in sites:
        block = _pairing_block(lambda o, s=site: _theta_forms(ders, "psi", s, o), None, self_check)
        _add_into(total, block)
    return TwoFormMatrix(_freeze(total), TWO_PI_I, tuple(orders.moduli_labels()))


def _block_index(orders: PoleOrders, alpha: int, i: int) -> int:
    return orders.a_index(alpha, i) if i < 2 * orders.m_finite[alpha] else orders.w_index(alpha)


def check_omega_pattern(orders: PoleOrders, omega: TwoFormMatrix, tol: float = 1e-10) -> None:
    scale = max(omega.max_abs(), 1e-300)
    exact = omega.is_exact()

    def is_zero(x: Scalar) -> bool:
        return x == 0 if exact else magnitude(x) <= tol * scale

    for alpha, m in enumerate(orders.m_finite):
        for i in range(1, 2 * m + 1):
            for j in range(1, 2 * m + 1):
                val = omega[_block_index(orders, alpha, i), _block_index(orders, alpha, j)]
                if i + j <= 2 * m and not is_zero(val):
                    raise StructureViolation(f"omega block entry ({i},{j}) of pole {alpha + 1} should vanish")
                if i + j == 2 * m + 1 and is_zero(val):
                    raise StructureViolation(f"omega antidiagonal entry ({i},{j}) of pole {alpha + 1} vanishes")
        for beta in range(orders.num_finite):
            if beta == alpha:
                continue
            for i in range(1, 2 * m + 1):
                for j in range(1, 2 * orders.m_finite[beta] + 1):
                    val = omega[_block_index(orders, alpha, i), _block_index(orders, beta, j)]
                    if not is_zero(val):
                        raise StructureViolation("omega couples two distinct finite poles")
    degenerate = linalg.det(omega.entries) == 0 if exact else linalg.rank(omega.entries) < omega.size
    if degenerate:
        raise StructureViolation("omega is degenerate")


# Checks ---------------------------------------------------------------------


@dataclass(frozen=True)
class KernelReport:
    residual: float
    kernel_dimension: int


def model_kernel_check(model: TwoFormModel, hbar: Scalar, flows: Sequence[FlowValue], omega: TwoFormMatrix | None = None) -> KernelReport:
    if omega is None:
        omega = model_omega_direct(model, hbar)
    mat = omega.entries
    scale = max(omega.max_abs(), 1e-300)
    worst = 0.0
    for flow in flows:
        row = linalg.matvec(linalg.transpose(mat), flow.at(hbar))
        worst = max(worst, max(magnitude(x) for x in row) / scale)
    return KernelReport(worst, omega.size - linalg.rank(mat))


def kernel_check(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar, omega: TwoFormMatrix | None = None) -> KernelReport:
    """``max |Omega(L_a, e_j)|`` (normalised) and the dimension of ``ker Omega``."""
    from .flows import all_flows

    return model_kernel_check(ext, hbar, all_flows(orders, ext), omega)


def _fd_step(c: Scalar) -> float:
    return 1e-5 * (1 + magnitude(c))


def model_closure_check(
    model: TwoFormModel, selector: Callable[[OmegaParts], TwoFormMatrix], step: Callable[[Scalar], float] = _fd_step
) -> float:
    """Max over ``i<j<k`` of the cyclic sum of central differences (relative to the entries)."""
    model = model.to_float()
    coords = list(model.coordinates())
    dim = len(coords)
    grads = []
    for i in range(dim):
        h = step(coords[i])
        if h == 0 or coords[i] + h == coords[i]:
            raise PrecisionFailure("finite-difference step underflow")
        plus = list(coords)
        minus = list(coords)
        plus[i] = coords[i] + h
        minus[i] = coords[i] - h
        mp = selector(model_omega_parts(model.continued(plus), self_check=False)).entries
        mm = selector(model_omega_parts(model.continued(minus), self_check=False)).entries
        grads.append([[(complex(a) - complex(b)) / (2 * h) for a, b in zip(ra, rb)] for ra, rb in zip(mp, mm)])
    base = selector(model_omega_parts(model, self_check=False))
    scale = max(base.max_abs(), 1e-300)
    worst = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                val = grads[i][j][k] + grads[j][k][i] + grads[k][i][j]
                worst = max(worst, abs(val))
    return worst / scale


def closure_check(orders: PoleOrders, ext: ExtendedPoint, selector: str) -> float:
    """Exterior derivative of one of ``Omega_-``, ``Omega_I``, ``Omega_+`` by central differences."""
    pick = {"minus": lambda p: p.minus, "I": lambda p: p.i_omega_I, "plus": lambda p: p.plus}
    if selector not in pick:
        raise InvalidInput("selector must be 'minus', 'I' or 'plus'")
    return model_closure_check(ext, pick[selector])


def omega_M_closure(orders: PoleOrders, pt: ModuliPoint) -> float:
    """``d omega`` on ``M`` by central differences."""
    pt = pt.to_float()
    coords = list(pt.coordinates())
    dim = len(coords)
    grads = []
    for i in range(dim):
        h = _fd_step(coords[i])
        plus, minus = list(coords), list(coords)
        plus[i] += h
        minus[i] -= h
        mp = omega_M(orders, ModuliPoint.from_coordinates(orders, plus), False, False).entries
        mm = omega_M(orders, ModuliPoint.from_coordinates(orders, minus), False, False).entries
        grads.append([[(complex(a) - complex(b)) / (2 * h) for a, b in zip(ra, rb)] for ra, rb in zip(mp, mm)])
    scale = max(omega_M(orders, pt, False, False).max_abs(), 1e-300)
    worst = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                worst = max(worst, abs(grads[i][j][k] + grads[j][k][i] + grads[k][i][j]))
    return worst / scale


@dataclass(frozen=True)
class HomothetyReport:
    minus: float
    omega_I: float
    plus: float


def homothety_check(orders: PoleOrders, ext: ExtendedPoint, lam: float) -> HomothetyReport:
    """Compare the parts at ``Phi_lambda(xi)`` with ``lambda**(2, 1, 0)`` times the parts at ``xi``."""
    if not isinstance(lam, (int, float, Fraction)) or lam <= 0:
        raise InvalidInput("the scale factor must be a positive real number")
    lam = float(lam)
    weights = [float(w) for w in orders.homothety_weights()]
    p_weight = (2 * orders.m_infinity - 5) / (2 * orders.m_infinity - 3)
    base = ext.to_float()
    coords = base.coordinates()
    scaled_coords = [c * lam**w for c, w in zip(coords, weights)]
    moved = base.with_coordinates(scaled_coords)
    eps = []
    for e, p_old, p_new in zip(moved.eps, base.p_values(), moved.p_values()):
        target = p_old * lam**p_weight
        eps.append(e if abs(p_new - target) <= abs(p_new + target) else -e)
    moved = ExtendedPoint(moved.base, moved.q, moved.v, tuple(eps))
    before = model_omega_parts(base, self_check=False)
    after = model_omega_parts(moved, self_check=False)
    out = []
    for name, power in (("minus", 2), ("i_omega_I", 1), ("plus", 0)):
        a = getattr(before, name).entries
        b = getattr(after, name).entries
        scale = max(linalg.max_abs(a), 1e-300) * lam**power
        worst = 0.0
        for j in range(len(a)):
            for k in range(len(a)):
                lhs = complex(b[j][k]) * lam ** (weights[j] + weights[k])
                worst = max(worst, abs(lhs - lam**power * complex(a[j][k])))
        out.append(worst / scale)
    return HomothetyReport(*out)


def euler_identity_residual(orders: PoleOrders, ext: ExtendedPoint, hbar: Scalar) -> float:
    """``(E + c x d/dx + hbar d/dhbar) Q + 2 c Q`` with ``c = 2/(2 m_inf - 3)``; exact zero expected."""
    c = Fraction(2, 2 * orders.m_infinity - 3)
    weights = orders.homothety_weights()
    coords = ext.coordinates()
    euler = [w * x for w, x in zip(weights, coords)]
    triple = ext.potentials()
    q = triple.assemble(hbar)
    dq = model_derivative_Q(ext, hbar, euler)
    x_dq = RationalFunction.polynomial([0, 1]) * q.derivative() * c
    h_dq = (triple.Q0 * div(-2, hbar * hbar)) + (triple.Q1 * div(-1, hbar))
    total = dq + x_dq + h_dq + q * (2 * c)
    if total.is_exact():
        total = total.normalized()
        return 0.0 if total.is_zero() else total.max_abs() / max(q.max_abs(), 1e-300)
    return total.num.max_abs() / max(q.num.max_abs(), 1e-300)


# Contour oracle -------------------------------------------------------------


def _np_poly(p) -> np.ndarray:
    return np.array([complex(to_float(c)) for c in reversed(p.coeffs)] or [0j], dtype=complex)


def _local_eval(f: RationalFunction, site: ExpansionSite, t: np.ndarray) -> np.ndarray:
    """``f`` at ``x = c + t`` (finite site) or ``x = 1/t`` (infinity).

    Numerator and denominator are re-expanded about the site before rounding,
    which keeps the evaluation accurate near a cluster of zeros.
    """
    if site.at_infinity:
        num = np.array([complex(to_float(c)) for c in f.num.coeffs] or [0j])
        den = np.array([complex(to_float(c)) for c in f.den.coeffs])
        shift = f.den.degree - max(f.num.degree, 0)
        return t**shift * np.polyval(num, t) / np.polyval(den, t)
    c = site.location
    return np.polyval(_np_poly(f.num.taylor_shift(c)), t) / np.polyval(_np_poly(f.den.taylor_shift(c)), t)


def _singularities(q: RationalFunction) -> np.ndarray:
    """Zeros and poles of ``q``; numerically coincident zero/pole pairs cancel."""
    if q.is_exact():
        q = q.normalized()
    zeros = list(np.roots(_np_poly(q.num))) if q.num.degree >= 1 else []
    if q.poles is not None:
        poles = [complex(to_float(r)) for r, m in q.poles for _ in range(m)]
    else:
        poles = list(np.roots(_np_poly(q.den))) if q.den.degree >= 1 else []
    kept = []
    for z in zeros:
        near = [k for k, r in enumerate(poles) if abs(z - r) <= 1e-5 * (1 + abs(r))]
        if near:
            poles.pop(near[0])
        else:
            kept.append(z)
    return np.array(kept + poles, dtype=complex)


def contour_radius(model: TwoFormModel, hbar: Scalar, site: ExpansionSite) -> float:
    """Radius in ``x`` that isolates ``site`` from every other zero or pole of ``Q``."""
    q = model.potentials().assemble(hbar)
    sing = _singularities(q)
    if site.at_infinity:
        return 2.0 * max(float(np.max(np.abs(sing))) if sing.size else 1.0, 1.0)
    c = complex(to_float(site.location))
    dist = np.abs(sing - c)
    dist = dist[dist > 1e-9 * (1 + abs(c))]
    return 0.5 * float(np.min(dist)) if dist.size else 1.0


def _contour_once(
    q: RationalFunction, du: RationalFunction, dv: RationalFunction, site: ExpansionSite, rx: float, nodes: int
) -> complex:
    r = site.ramification
    theta = 2 * np.pi * np.arange(nodes) / nodes
    rho = rx ** (-1.0 / r) if site.at_infinity else rx ** (1.0 / r)
    s = rho * np.exp(1j * theta)
    t = s**r
    dxds = -r * s ** (-r - 1) if site.at_infinity else r * s ** (r - 1)
    y = np.sqrt(_local_eval(q, site, t))
    for k in range(1, nodes):
        if abs(y[k] - y[k - 1]) > abs(y[k] + y[k - 1]):
            y[k] = -y[k]
    if abs(y[0] - y[-1]) > abs(y[0] + y[-1]):
        raise PrecisionFailure("the root of Q is not single-valued on the contour")
    f = _local_eval(du, site, t) / (2 * y) * dxds * 1j * s  # U(Psi) per unit angle
    g = _local_eval(dv, site, t) / (2 * y) * dxds * 1j * s
    coeffs = np.fft.fft(f) / nodes
    freqs = np.fft.fftfreq(nodes, d=1.0 / nodes)
    anti = np.zeros_like(coeffs)
    mask = (freqs != 0) & (np.abs(freqs) != nodes // 2)
    anti[mask] = coeffs[mask] / (1j * freqs[mask])
    prim = np.fft.ifft(anti) * nodes
    return complex(np.sum(prim * g) / (1j * nodes))


def model_contour_oracle(
    model: TwoFormModel,
    hbar: Scalar,
    u: Sequence[Scalar],
    v: Sequence[Scalar],
    site: ExpansionSite,
    nodes: int = 256,
    radius: float | None = None,
    tol: float = 1e-9,
) -> complex:
    q = model.potentials().assemble(hbar)
    du = model_derivative_Q(model, hbar, u)
    dv = model_derivative_Q(model, hbar, v)
    rx = radius if radius is not None else contour_radius(model, hbar, site)
    coarse = _contour_once(q, du, dv, site, rx, nodes)
    fine = _contour_once(q, du, dv, site, rx, 2 * nodes)
    if abs(coarse - fine) > tol * max(1.0, abs(fine)):
        raise PrecisionFailure(f"quadrature did not converge: {coarse} vs {fine}")
    return fine


def contour_oracle(
    orders: PoleOrders,
    ext: ExtendedPoint,
    hbar: Scalar,
    U: Sequence[Scalar],
    V: Sequence[Scalar],
    site: ExpansionSite,
    nodes: int = 256,
    radius: float | None = None,
) -> complex:
    """``(1/2 pi i) \\oint d^-1 U(Psi) V(Psi)`` around ``site`` by trapezoidal quadrature."""
    return model_contour_oracle(ext, hbar, U, V, site, nodes, radius)


def model_omega_contour(model: TwoFormModel, hbar: Scalar, u: Sequence[Scalar], v: Sequence[Scalar]) -> complex:
    """The reduced ``Omega(U, V)`` assembled entirely from contour integrals."""
    total = 0j
    for site in model.pole_sites():
        total += model_contour_oracle(model, hbar, u, v, site)
    for site in _psi_sites(model):
        total += 2 * model_contour_oracle(model, hbar, u, v, site)
    return total
