"""Quaternionic frame of the twistor distribution and the metric it defines.

Given generators ``U_a + V_a/hbar`` spanning the twistor distribution, the
endomorphisms ``I``, ``J``, ``K`` are fixed on the basis ``{U_a, V_a}`` by

    I U = -i U,  I V = i V,   J U = V,  J V = -U,   K = I J,

and the metric is ``g = -Omega_I(I., .)``.  All matrices act on column
vectors in the coordinate basis of ``X``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .algebra import linalg
from .algebra.scalar import I as IMAG
from .algebra.scalar import Scalar, magnitude, to_extended
from .errors import InvalidInput, PrecisionFailure, StructureViolation
from .flows import FlowValue
from .twoforms import OmegaParts, TwoFormMatrix


@dataclass(frozen=True)
class QuaternionFrame:
    U_basis: tuple[tuple[Scalar, ...], ...]
    V_basis: tuple[tuple[Scalar, ...], ...]
    I: linalg.Matrix
    J: linalg.Matrix
    K: linalg.Matrix

    @property
    def size(self) -> int:
        return len(self.I)

    def relations_residual(self) -> float:
        """Largest entry of ``I**2 + 1``, ``J**2 + 1``, ``K**2 + 1`` and ``IJK + 1``.

        Each is relative to ``max(1, product of the factors' largest entries)``,
        the size at which rounding enters the products.
        """
        one = linalg.identity(self.size)
        ni, nj, nk = (linalg.max_abs(m) for m in (self.I, self.J, self.K))
        checks = [
            (linalg.matmul(self.I, self.I), ni * ni),
            (linalg.matmul(self.J, self.J), nj * nj),
            (linalg.matmul(self.K, self.K), nk * nk),
            (linalg.matmul(linalg.matmul(self.I, self.J), self.K), ni * nj * nk),
        ]
        return max(linalg.max_abs(linalg.add(m, one)) / max(1.0, size) for m, size in checks)

    def nu(self) -> linalg.Matrix:
        """``(J - i K)/2``, which maps ``U_a`` to ``V_a`` and kills ``V_a``."""
        return linalg.scale(linalg.add(self.J, linalg.scale(self.K, -IMAG)), Fraction(1, 2))


@dataclass(frozen=True)
class MetricMatrix:
    """Symmetric matrix of reduced entries; the metric itself is ``factor * entries``."""

    entries: linalg.Matrix
    factor: complex
    labels: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, jk: tuple[int, int]) -> Scalar:
        return self.entries[jk[0]][jk[1]]

    def full(self) -> np.ndarray:
        return linalg.to_numpy(self.entries) * self.factor

    def max_abs(self) -> float:
        return linalg.max_abs(self.entries)

    def symmetry_residual(self) -> float:
        n = self.size
        return max(
            (magnitude(self.entries[j][k] - self.entries[k][j]) for j in range(n) for k in range(n)),
            default=0.0,
        )

    def scaled(self, c: Scalar) -> MetricMatrix:
        return MetricMatrix(linalg.scale(self.entries, c), self.factor, self.labels)


def _columns(vectors: Sequence[Sequence[Scalar]]) -> linalg.Matrix:
    return linalg.transpose(linalg.as_matrix(vectors))


def build_frame(flows: Sequence[FlowValue]) -> QuaternionFrame:
    """``I``, ``J``, ``K`` from the ``U`` and ``V`` parts of the generators."""
    if not flows:
        raise InvalidInput("no generators given")
    us = [f.U_part for f in flows]
    vs = [f.V_part for f in flows]
    dim = len(us[0])
    if 2 * len(flows) != dim:
        raise InvalidInput(f"{len(flows)} generators cannot span a frame of dimension {dim}")
    p = _columns(us + vs)
    if linalg.rank(p) < dim:
        raise StructureViolation("the U and V parts of the generators are linearly dependent")
    p_inv = linalg.inverse(p)
    half = len(flows)

    def conj(block: Callable[[int, int], Scalar]) -> linalg.Matrix:
        core = tuple(tuple(block(r, c) for c in range(dim)) for r in range(dim))
        return linalg.matmul(linalg.matmul(p, core), p_inv)

    def i_block(r: int, c: int) -> Scalar:
        if r != c:
            return 0
        return -IMAG if r < half else IMAG

    def j_block(r: int, c: int) -> Scalar:
        if r >= half and c == r - half:
            return 1
        if r < half and c == r + half:
            return -1
        return 0

    def k_block(r: int, c: int) -> Scalar:
        if (r >= half and c == r - half) or (r < half and c == r + half):
            return IMAG
        return 0

    return QuaternionFrame(tuple(us), tuple(vs), conj(i_block), conj(j_block), conj(k_block))


def assemble_metric(frame: QuaternionFrame, omega_I: TwoFormMatrix) -> MetricMatrix:
    """``g(X, Y) = -Omega_I(I X, Y)``, i.e. ``g = -I^T Omega_I``, in reduced entries."""
    if linalg.rank(omega_I.entries) < omega_I.size:
        raise StructureViolation("Omega_I is degenerate")
    g = linalg.scale(linalg.matmul(linalg.transpose(frame.I), omega_I.entries), -1)
    return MetricMatrix(g, omega_I.factor, omega_I.labels)


def hermiticity_residuals(metric: MetricMatrix, frame: QuaternionFrame) -> tuple[float, float, float]:
    """``max |E^T g E - g|`` for ``E = I, J, K``, relative to ``max |g|``."""
    g = metric.entries
    scale = max(metric.max_abs(), 1e-300)
    out = []
    for e in (frame.I, frame.J, frame.K):
        moved = linalg.matmul(linalg.matmul(linalg.transpose(e), g), e)
        out.append(linalg.max_abs(linalg.add(moved, linalg.scale(g, -1))) / scale)
    return tuple(out)


def _row(vec: Sequence[Scalar], mat: linalg.Matrix) -> tuple[Scalar, ...]:
    return linalg.matvec(linalg.transpose(mat), vec)


def annihilator_check(
    minus: TwoFormMatrix, i_omega_I: TwoFormMatrix, plus: TwoFormMatrix, frame: QuaternionFrame
) -> tuple[float, float]:
    """``max |Omega_-(U_a, .) + i Omega_I(V_a, .)|`` and ``max |Omega_+(V_a, .) + i Omega_I(U_a, .)|``.

    The three matrices must share the factor ``2 pi i``; residuals are
    relative to the largest entry involved.
    """
    scale = max(minus.max_abs(), i_omega_I.max_abs(), plus.max_abs(), 1e-300)
    first = second = 0.0
    for u, v in zip(frame.U_basis, frame.V_basis):
        size = max(max(magnitude(x) for x in u), max(magnitude(x) for x in v), 1e-300)
        r1 = [a + b for a, b in zip(_row(u, minus.entries), _row(v, i_omega_I.entries))]
        r2 = [a + b for a, b in zip(_row(v, plus.entries), _row(u, i_omega_I.entries))]
        first = max(first, max(magnitude(x) for x in r1) / (scale * size))
        second = max(second, max(magnitude(x) for x in r2) / (scale * size))
    return first, second


def metric_from_parts(parts: OmegaParts, frame: QuaternionFrame) -> MetricMatrix:
    return assemble_metric(frame, parts.omega_I)


def jk_identities(parts: OmegaParts, frame: QuaternionFrame, metric: MetricMatrix) -> tuple[float, float]:
    """``-(Omega_- + Omega_+)(J., .) = g`` and ``-(Omega_- - Omega_+)(K., .) = -i g`` (relative).

    The second follows from ``Omega_- - Omega_+ = -i g(K., .)``.
    """
    g = metric.full()
    scale = max(float(np.max(np.abs(g))), 1e-300)
    m, p = parts.minus.full(), parts.plus.full()
    j, k = linalg.to_numpy(frame.J), linalg.to_numpy(frame.K)
    first = -(j.T @ (m + p))
    second = -(k.T @ (m - p))
    return float(np.max(np.abs(first - g))) / scale, float(np.max(np.abs(second + 1j * g))) / scale


def ricci_numeric(
    metric_field: Callable[[Sequence[Scalar]], np.ndarray],
    point: Sequence[Scalar],
    step: float = 1e-4,
    cond_limit: float = 1e12,
    dps: int | None = None,
) -> np.ndarray:
    """Ricci tensor of a holomorphic metric from second-order central differences.

    ``metric_field`` maps a coordinate vector to the metric matrix.  Uses the
    first and second derivatives of ``g`` at ``point`` only:
    ``R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik``.
    With ``dps`` set, coordinates are passed as mpmath numbers and the
    differences are taken at that precision before rounding, so the result
    is limited by truncation rather than cancellation.
    """
    if hasattr(point, "coordinates"):
        point = point.coordinates()
    d = len(point)
    h = step
    ctx = mpmath.workdps(dps) if dps else contextlib.nullcontext()
    with ctx:
        lift = to_extended if dps else complex
        x0 = [lift(c) for c in point]

        def g_at(offset: dict[int, float]) -> np.ndarray:
            x = list(x0)
            for k, t in offset.items():
                x[k] = x[k] + lift(t * h)
            return np.asarray(metric_field(x), dtype=object if dps else complex)

        g0 = g_at({})
        plus = [g_at({k: 1}) for k in range(d)]
        minus = [g_at({k: -1}) for k in range(d)]
        dg = np.array([(plus[k] - minus[k]) / (2 * h) for k in range(d)])  # dg[k, i, j]
        ddg = np.zeros((d, d, d, d), dtype=dg.dtype)  # ddg[k, l, i, j]
        for k in range(d):
            ddg[k, k] = (plus[k] - 2 * g0 + minus[k]) / (h * h)
            for l in range(k + 1, d):
                val = (g_at({k: 1, l: 1}) - g_at({k: 1, l: -1}) - g_at({k: -1, l: 1}) + g_at({k: -1, l: -1})) / (
                    4 * h * h
                )
                ddg[k, l] = ddg[l, k] = val
        g0, dg, ddg = (np.vectorize(complex, otypes=[complex])(a) for a in (g0, dg, ddg))
    if np.linalg.cond(g0) > cond_limit:
        raise PrecisionFailure("metric is too ill-conditioned to invert")
    g_inv = np.linalg.inv(g0)
    # Gamma_{m ij} = (d_i g_mj + d_j g_mi - d_m g_ij)/2 and its derivatives
    low = 0.5 * (np.einsum("imj->mij", dg) + np.einsum("jmi->mij", dg) - dg)
    d_low = 0.5 * (
        np.einsum("limj->lmij", ddg) + np.einsum("ljmi->lmij", ddg) - ddg
    )  # d_l Gamma_{m ij}
    gamma = np.einsum("km,mij->kij", g_inv, low)
    d_ginv = -np.einsum("ka,lab,bm->lkm", g_inv, dg, g_inv)
    d_gamma = np.einsum("lkm,mij->lkij", d_ginv, low) + np.einsum("km,lmij->lkij", g_inv, d_low)
    ricci = (
        np.einsum("kkij->ij", d_gamma)
        - np.einsum("jkik->ij", d_gamma)
        + np.einsum("kkl,lij->ij", gamma, gamma)
        - np.einsum("kjl,lik->ij", gamma, gamma)
    )
    return ricci


def ricci_convergence(
    metric_field: Callable[[Sequence[Scalar]], np.ndarray],
    point: Sequence[Scalar],
    step: float = 1e-4,
    dps: int | None = None,
) -> tuple[float, float, float]:
    """``(max|Ric| at step, at step/2, observed order)``; the order is ``log2`` of the ratio."""
    r1 = float(np.max(np.abs(ricci_numeric(metric_field, point, step, dps=dps))))
    r2 = float(np.max(np.abs(ricci_numeric(metric_field, point, step / 2, dps=dps))))
    order = math.log2(r1 / r2) if r1 > 0 and r2 > 0 else float("inf")
    return r1, r2, order
