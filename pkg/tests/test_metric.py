from __future__ import annotations

import random

import numpy as np
import pytest

from conftest import CASE_IDS, CASES, sample
from isohk.algebra import linalg
from isohk.errors import InvalidInput, PrecisionFailure, StructureViolation
from isohk.flows import all_flows
from isohk.metric import (
    annihilator_check,
    assemble_metric,
    build_frame,
    hermiticity_residuals,
    jk_identities,
    ricci_numeric,
)
from isohk.twoforms import omega_parts_residue


def structure(orders, ext):
    parts = omega_parts_residue(orders, ext)
    frame = build_frame(all_flows(orders, ext))
    return parts, frame, assemble_metric(frame, parts.omega_I)


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_frame_relations_are_exact(case):
    orders, ext = sample(tuple(case), 0)
    frame = build_frame(all_flows(orders, ext))
    assert frame.relations_residual() == 0
    nu = frame.nu()
    for u, v in zip(frame.U_basis, frame.V_basis):
        assert linalg.matvec(nu, u) == tuple(v)
        assert all(x == 0 for x in linalg.matvec(nu, v))


def test_I_has_balanced_eigenvalues():
    orders, ext = sample((5, 3), 0)
    frame = build_frame(all_flows(orders, ext))
    eig = np.linalg.eigvals(linalg.to_numpy(frame.I))
    n = orders.n
    assert np.sum(np.abs(eig - 1j) < 1e-9) == 2 * n
    assert np.sum(np.abs(eig + 1j) < 1e-9) == 2 * n


def test_frame_rejects_dependent_generators():
    orders, ext = sample((7,), 0)
    flows = all_flows(orders, ext)
    with pytest.raises(StructureViolation):
        build_frame([flows[0], flows[0]])
    with pytest.raises(InvalidInput):
        build_frame(flows[:1])


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_metric_identities_exact(case):
    orders, ext = sample(tuple(case), 1)
    parts, frame, g = structure(orders, ext)
    assert g.symmetry_residual() == 0
    assert linalg.det(g.entries) != 0
    assert hermiticity_residuals(g, frame) == (0.0, 0.0, 0.0)
    assert annihilator_check(parts.minus, parts.i_omega_I, parts.plus, frame) == (0.0, 0.0)


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_metric_identities_float(case):
    orders, ext = sample(tuple(case), 2)
    fext = ext.to_float()
    parts, frame, g = structure(orders, fext)
    assert frame.relations_residual() < 1e-10
    assert g.symmetry_residual() / g.max_abs() < 1e-10
    assert max(hermiticity_residuals(g, frame)) < 1e-8
    assert max(annihilator_check(parts.minus, parts.i_omega_I, parts.plus, frame)) < 1e-8
    assert max(jk_identities(parts, frame, g)) < 1e-8


def test_annihilator_detects_a_wrong_frame():
    orders, ext = sample((7, 1), 0)
    parts, frame, _ = structure(orders, ext.to_float())
    rng = random.Random(3)
    bad_v = tuple(tuple(complex(rng.uniform(-1, 1)) for _ in row) for row in frame.V_basis)
    bad = type(frame)(frame.U_basis, bad_v, frame.I, frame.J, frame.K)
    assert max(annihilator_check(parts.minus, parts.i_omega_I, parts.plus, bad)) > 1e-4


@pytest.mark.parametrize("case", CASES, ids=CASE_IDS)
def test_metric_changes_sign_under_involution(case):
    orders, ext = sample(tuple(case), 0)
    _, _, g = structure(orders, ext)
    _, _, h = structure(orders, ext.flipped())
    assert all(x == -y for rx, ry in zip(g.entries, h.entries) for x, y in zip(rx, ry))


def test_degenerate_omega_I_is_rejected():
    orders, ext = sample((7,), 0)
    parts, frame, _ = structure(orders, ext)
    zero = type(parts.omega_I)(linalg.zeros(4), parts.omega_I.factor, parts.omega_I.labels)
    with pytest.raises(StructureViolation):
        assemble_metric(frame, zero)


def test_ricci_of_flat_metric_vanishes():
    const = np.diag([1.0, -2.0, 3.0, 0.5]).astype(complex)
    ric = ricci_numeric(lambda x: const, [0.1, 0.2, 0.3, 0.4])
    assert np.max(np.abs(ric)) < 1e-12


def test_ricci_of_round_sphere():
    # g = dth^2 + sin^2(th) dph^2 has Ric = g
    def field(x):
        s = np.sin(complex(x[0]))
        return np.array([[1, 0], [0, s * s]], dtype=complex)

    point = [0.9, 0.3]
    ric = ricci_numeric(field, point, step=1e-4)
    g = field(point)
    assert np.max(np.abs(ric - g)) < 1e-6


def test_ricci_convergence_order_on_a_curved_conformal_metric():
    # conformally flat metric of constant curvature: Ric - k(n-1)g converges at second order
    def field(x):
        z = sum(complex(c) ** 2 for c in x)
        return np.eye(3, dtype=complex) * (4 / (1 + z) ** 2)

    point = [0.2, -0.1, 0.3]
    g = field(point)
    errs = []
    for h in (1e-2, 5e-3):
        errs.append(np.max(np.abs(ricci_numeric(field, point, step=h) - 2 * g)))
    order = np.log2(errs[0] / errs[1])
    assert 1.8 < order < 2.2


def test_ricci_rejects_singular_metric():
    with pytest.raises(PrecisionFailure):
        ricci_numeric(lambda x: np.zeros((2, 2), dtype=complex), [0.0, 0.0])
