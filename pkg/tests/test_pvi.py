from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from isohk.algebra.scalar import magnitude
from isohk.errors import InvalidInput, InvalidPoint, SingularConfiguration
from isohk.flows import model_derivative_Q, model_flatness_residual
from isohk.metric import annihilator_check, hermiticity_residuals, ricci_convergence
from isohk.moduli import verify_apparent_singularity
from isohk.pvi import (
    ALGEBRAIC_FACTORS,
    PviPoint,
    branch_residual,
    euler_norm,
    killing_component,
    metric_mismatch,
    pvi_algebraic_check,
    pvi_flow_residual,
    pvi_flows,
    pvi_integrate,
    pvi_metric,
    pvi_metric_field,
    pvi_potentials,
    pvi_rhs,
    pvi_killing_check,
    pvi_structure,
    random_pvi_point,
)

HBARS = (1, 2, Fraction(-3, 5))
REFERENCE = PviPoint.build(1, 2, 3, Fraction(1, 2))


def test_point_validation():
    with pytest.raises(InvalidPoint):
        PviPoint.build(0, 2, 3, 0)
    with pytest.raises(InvalidPoint):
        PviPoint.build(1, 1, 3, 0)
    with pytest.raises(InvalidPoint):
        PviPoint.build(1, 2, 2, 0)
    with pytest.raises(InvalidPoint):
        PviPoint.build(1, 2, 3, 0, eps=0)


@pytest.mark.parametrize("seed", range(5))
def test_R_and_S_at_q(seed):
    pt = random_pvi_point(seed)
    assert pt.is_exact()
    assert pt.R()(pt.q) == 2 * pt.p * pt.v
    assert pt.S()(pt.q) == pt.v * pt.v
    pvi_potentials(pt)


@pytest.mark.parametrize("seed", range(3))
def test_apparent_singularity(seed):
    pt = random_pvi_point(seed)
    for h in HBARS:
        q = pvi_potentials(pt).assemble(h)
        assert verify_apparent_singularity(q, pt.q, pt.p / h + pt.v).residual == 0


def test_Q0_has_the_four_simple_poles():
    pt = random_pvi_point(0)
    q0 = pt.Q0().normalized()
    assert sorted((r, m) for r, m in q0.poles) == sorted([(0, 1), (1, 1), (pt.w, 1)])
    # residues sum to zero, so Q0 vanishes at infinity to second order
    assert q0.num.degree <= q0.den.degree - 2


@pytest.mark.parametrize("seed", range(5))
def test_flows_are_flat(seed):
    pt = random_pvi_point(seed)
    u, v = pvi_flows(pt)
    for h in HBARS:
        assert model_flatness_residual(pt, h, u) == 0
        assert model_flatness_residual(pt, h, v) == 0
        assert model_derivative_Q(pt, h, u.at(h)).is_zero()


def test_dq_of_V():
    pt = random_pvi_point(2)
    _, v = pvi_flows(pt)
    for h in HBARS:
        want = (pt.kappa() + 2 * pt.p * pt.q * (pt.q - 1) / h) / pt.A_w()
        assert v.at(h)[2] == want
        assert v.at(h)[1] == 1


def test_float_flatness_at_the_reference_point():
    pt = REFERENCE.to_float()
    for flow in pvi_flows(pt):
        assert model_flatness_residual(pt, 1, flow) < 1e-8


def test_A_of_w_vanishing_is_singular():
    pt = PviPoint(1, Fraction(1, 2), 3, 0)
    object.__setattr__(pt, "w", 1)
    with pytest.raises(SingularConfiguration):
        pt.A_w()


@pytest.mark.parametrize("seed", range(5))
def test_painleve_residual_along_V_is_exact(seed):
    pt = random_pvi_point(seed)
    for h in HBARS:
        assert pvi_flow_residual(pt, h) == 0


def test_painleve_rhs_matches_symbolic_form():
    q, dq, w = sympy.symbols("q dq w")
    half = sympy.Rational(1, 2)
    rhs = (
        half * (1 / q + 1 / (q - 1) + 1 / (q - w)) * dq**2
        - (1 / w + 1 / (w - 1) + 1 / (q - w)) * dq
        + q * (q - 1) * (q - w) / (w**2 * (w - 1) ** 2) * (half - half * w / q**2 + half * (w - 1) / (q - 1) ** 2)
    )
    for vals in ((Fraction(3), Fraction(1, 2), Fraction(2)), (Fraction(-5, 7), Fraction(4, 3), Fraction(9, 2))):
        got = pvi_rhs(vals[0], vals[1], vals[2])
        want = rhs.subs({q: sympy.Rational(*vals[0].as_integer_ratio()), dq: sympy.Rational(*vals[1].as_integer_ratio()), w: sympy.Rational(*vals[2].as_integer_ratio())})
        assert sympy.Rational(got.numerator, got.denominator) == want


@pytest.mark.parametrize("seed", range(5))
def test_closed_metric_matches_frame_assembly(seed):
    assert metric_mismatch(random_pvi_point(seed)) < 1e-10


def test_closed_metric_matches_at_a_float_point():
    assert metric_mismatch(REFERENCE.to_float()) < 1e-10


def test_frame_structure_identities():
    pt = random_pvi_point(1)
    st_ = pvi_structure(pt)
    assert st_.frame.relations_residual() == 0
    assert hermiticity_residuals(st_.metric, st_.frame) == (0.0, 0.0, 0.0)
    assert annihilator_check(st_.parts.minus, st_.parts.i_omega_I, st_.parts.plus, st_.frame) == (0.0, 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_base_form_normalisation(seed):
    st_ = pvi_structure(random_pvi_point(seed))
    assert st_.omega(0, 1) == Fraction(1, 2)
    # the opposite ordering carries the antisymmetric sign
    assert st_.omega_wa() == Fraction(-1, 2)
    for j in (2, 3):
        assert all(st_.omega(j, k) == 0 for k in range(4))


def test_metric_pairing_conventions():
    pt = random_pvi_point(3)
    g = pvi_metric(pt)
    assert g[1, 3] == -Fraction(1, 2) / pt.dp()[0]
    assert g[0, 0] == 0 and g[3, 3] == 0 and g[2, 2] == 0


@pytest.mark.parametrize("seed", range(5))
def test_euler_field_is_null(seed):
    exact, assembled = euler_norm(random_pvi_point(seed))
    assert exact == 0
    assert abs(assembled) < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_killing_exact(seed):
    rep = pvi_killing_check(random_pvi_point(seed))
    assert rep.exact and rep.q1_residual == 0
    assert rep.lie_residual < 1e-6


def test_killing_float():
    pt = PviPoint.build(1, 2, 3, Fraction(7, 5))
    assert not pt.is_exact()
    rep = pvi_killing_check(pt)
    assert rep.q1_residual < 1e-10
    assert rep.lie_residual < 1e-6


def test_killing_component_is_linear_in_a():
    pt = random_pvi_point(4)
    doubled = PviPoint(2 * pt.a, pt.w, pt.q, pt.v, pt.eps)
    ratio = killing_component(doubled) / killing_component(pt)
    # p scales with sqrt(a), so the ratio is 2/sqrt(2) unless p is held fixed
    assert abs(complex(ratio) - 2**0.5) < 1e-12
    p = pt.p
    assert killing_component(pt) * (2 * p) == pt.a * pt.w * (pt.w - 1) / (pt.q * (pt.q - 1) * (pt.q - pt.w))


def test_lie_derivative_detects_a_wrong_vector():
    pt = random_pvi_point(0).to_float()
    field = pvi_metric_field(pt)
    x0 = np.array([complex(c) for c in pt.coordinates()])
    g0 = field(x0)
    # d/dv is not Killing: it changes the d(w)d(w) coefficient
    h = 1e-5
    e = np.array([0, 0, 0, h])
    lie = (field(x0 + e) - field(x0 - e)) / (2 * h)
    assert np.max(np.abs(lie)) / np.max(np.abs(g0)) > 1e-4


@pytest.mark.parametrize("seed", [0, 1])
def test_ricci_flat(seed):
    pt = random_pvi_point(seed)
    r1, r2, order = ricci_convergence(pvi_metric_field(pt), pt.to_float(), 1e-4, dps=40)
    assert r1 < 1e-5
    assert abs(order - 2) < 0.5


def test_integration_needs_a_detour():
    with pytest.raises(SingularConfiguration):
        pvi_integrate(REFERENCE, 1, 3.0, 1e-10, detour=0.0)


def test_integration_residual_and_convergence():
    coarse = pvi_integrate(REFERENCE, 1, 3.0, 1e-9, detour=0.3)
    fine = pvi_integrate(REFERENCE, 1, 3.0, 1e-10, detour=0.3)
    assert fine.residual < 1e-6
    assert fine.jet_residual < 1e-10
    # p is carried by its own ODE, so it drifts from sqrt(Q0(q)) at the integration tolerance
    assert fine.p_drift < 1e-6 and fine.p_drift < coarse.p_drift / 5
    assert coarse.residual >= 5 * fine.residual
    assert abs(fine.w[0] - 2) < 1e-2 and abs(fine.w[-1] - 3) < 1e-2


def test_conjugate_detours_give_conjugate_data():
    up = pvi_integrate(REFERENCE, 1, 3.0, 1e-10, detour=0.3)
    down = pvi_integrate(REFERENCE, 1, 3.0, 1e-10, detour=-0.3)
    assert abs(up.end[0] - down.end[0].conjugate()) < 1e-7


def test_algebraic_branches():
    at4 = {(b.factor, b.q): b for b in pvi_algebraic_check(4)}
    assert magnitude(at4[("q^2 - w", 2)].residual) < 1e-10
    at34 = [b for b in pvi_algebraic_check(Fraction(3, 4)) if b.factor == "q^2 - 2q + w"]
    assert sorted(b.q for b in at34) == [Fraction(1, 2), Fraction(3, 2)]
    assert all(b.residual == 0 for b in at34)
    for w in (Fraction(5, 2), 4, Fraction(-3)):
        for b in pvi_algebraic_check(w):
            assert b.skipped or magnitude(b.residual) < 1e-10


def test_algebraic_negative_controls():
    printed = lambda q, w: (q * q - 2 * q * w - w, 2 * q - 2 * w, -2 * q - 1, 2, -2, 0)
    w = Fraction(5, 2)
    q = w + (w * w + w) ** 0.5
    assert magnitude(branch_residual(printed, q, w)) > 1e-2
    diagonal = lambda q, w: (q - w, 1, -1, 0, 0, 0)
    w = Fraction(7, 3)
    assert magnitude(branch_residual(diagonal, Fraction(7, 3) + Fraction(1, 10), w)) > 1e-2
    with pytest.raises(InvalidInput):
        pvi_algebraic_check(0)
    with pytest.raises(InvalidInput):
        pvi_algebraic_check(1)


def test_algebraic_factors_against_symbolic_oracle():
    q, w = sympy.symbols("q w")
    exprs = {"q^2 - w": q**2 - w, "q^2 - 2q + w": q**2 - 2 * q + w, "q^2 - 2qw + w": q**2 - 2 * q * w + w}
    assert set(exprs) == {name for name, _ in ALGEBRAIC_FACTORS}
    for f in exprs.values():
        dq = -sympy.diff(f, w) / sympy.diff(f, q)
        ddq = sympy.diff(dq, w) + sympy.diff(dq, q) * dq
        half = sympy.Rational(1, 2)
        rhs = (
            half * (1 / q + 1 / (q - 1) + 1 / (q - w)) * dq**2
            - (1 / w + 1 / (w - 1) + 1 / (q - w)) * dq
            + q * (q - 1) * (q - w) / (w**2 * (w - 1) ** 2) * (half - half * w / q**2 + half * (w - 1) / (q - 1) ** 2)
        )
        for branch in sympy.solve(f, q):
            assert sympy.simplify((ddq - rhs).subs(q, branch)) == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_random_points_are_consistent(seed):
    pt = random_pvi_point(seed)
    assert pt.p * pt.p == pt.Q0()(pt.q)
    assert pvi_flow_residual(pt) == 0
    assert metric_mismatch(pt) < 1e-10
