"""Resultants and discriminants of univariate polynomials."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from .poly import Polynomial
from .scalar import Scalar, div


def _sylvester(a: Polynomial, b: Polynomial) -> np.ndarray:
    m, n = a.degree, b.degree
    size = m + n
    mat = np.zeros((size, size), dtype=complex)
    ra = [complex(c) for c in reversed(a.coeffs)]
    rb = [complex(c) for c in reversed(b.coeffs)]
    for i in range(n):
        mat[i, i : i + m + 1] = ra
    for i in range(m):
        mat[n + i, i : i + n + 1] = rb
    return mat


def resultant(a: Polynomial, b: Polynomial) -> Scalar:
    """Resultant; Euclidean recursion when exact, Sylvester determinant otherwise."""
    if a.is_zero() or b.is_zero():
        return 0
    if not (a.is_exact() and b.is_exact()):
        if a.degree == 0 and b.degree == 0:
            return 1
        return complex(np.linalg.det(_sylvester(a, b)))
    sign = 1
    acc: Scalar = 1
    while True:
        da, db = a.degree, b.degree
        if db == 0:
            return sign * acc * b.lc**da
        _, r = a.divmod(b)
        if r.is_zero():
            return 0
        if (da * db) % 2:
            sign = -sign
        acc = acc * b.lc ** (da - r.degree)
        a, b = b, r


def discriminant(p: Polynomial) -> Scalar:
    """``(-1)**(d(d-1)/2) res(p, p') / lc(p)``."""
    d = p.degree
    if d < 1:
        raise InvalidInput("discriminant needs degree at least 1")
    if d == 1:
        return 1
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    return div(sign * resultant(p, p.derivative()), p.lc)


def relative_root_separation(p: Polynomial) -> float:
    """``min |r_i - r_j| / (|r_i| + |r_j|)`` over numerical root pairs (1.0 if d < 2)."""
    if p.degree < 2:
        return 1.0
    roots = np.roots([complex(c) for c in reversed(p.coeffs)])
    best = 1.0
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            scale = abs(roots[i]) + abs(roots[j])
            if scale == 0:
                return 0.0
            best = min(best, abs(roots[i] - roots[j]) / scale)
    return best
