"""Small dense linear algebra over exact or float scalars.

Matrices are tuples of row tuples.  Exact matrices use Gaussian elimination
over the rationals; float matrices go through numpy.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import InvalidInput
from .scalar import Scalar, div, is_exact, value_part

Matrix = tuple[tuple[Scalar, ...], ...]


def as_matrix(rows: Sequence[Sequence[Scalar]]) -> Matrix:
    return tuple(tuple(r) for r in rows)


def is_exact_matrix(m: Sequence[Sequence[Scalar]]) -> bool:
    return all(is_exact(x) for row in m for x in row)


def to_numpy(m: Sequence[Sequence[Scalar]]) -> np.ndarray:
    return np.array([[complex(value_part(x)) for x in row] for row in m], dtype=complex)


def from_numpy(a: np.ndarray) -> Matrix:
    return tuple(tuple(complex(x) for x in row) for row in a)


def zeros(n: int, m: int | None = None) -> Matrix:
    return tuple(tuple(0 for _ in range(n if m is None else m)) for _ in range(n))


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m)) if m else ()


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(_dot(row, col) for col in bt) for row in a)


def matvec(a: Matrix, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
    return tuple(_dot(row, v) for row in a)


def _dot(u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    acc: Scalar = 0
    for x, y in zip(u, v):
        if x == 0 or y == 0:
            continue
        acc = acc + x * y
    return acc


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(a: Matrix, c: Scalar) -> Matrix:
    return tuple(tuple(x * c for x in row) for row in a)


def _echelon(m: Sequence[Sequence[Scalar]]) -> tuple[list[list[Scalar]], int, Scalar]:
    """Row echelon form over an exact field: (rows, rank, determinant sign*pivots)."""
    rows = [list(r) for r in m]
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    rank = 0
    det: Scalar = 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if rows[r][col] != 0), None)
        if pivot is None:
            det = 0
            continue
        if pivot != rank:
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            det = -det
        p = rows[rank][col]
        det = det * p
        for r in range(rank + 1, n_rows):
            f = rows[r][col]
            if f == 0:
                continue
            factor = div(f, p)
            rows[r] = [x - factor * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        if rank == n_rows:
            break
    return rows, rank, det


def det(m: Sequence[Sequence[Scalar]]) -> Scalar:
    n = len(m)
    if any(len(r) != n for r in m):
        raise InvalidInput("determinant of a non-square matrix")
    if n == 0:
        return 1
    if is_exact_matrix(m):
        _, rank, d = _echelon(m)
        return d if rank == n else 0
    return complex(np.linalg.det(to_numpy(m)))


def rank(m: Sequence[Sequence[Scalar]], rtol: float = 1e-9) -> int:
    if not m:
        return 0
    if is_exact_matrix(m):
        return _echelon(m)[1]
    sv = np.linalg.svd(to_numpy(m), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def solve(a: Sequence[Sequence[Scalar]], b: Sequence[Sequence[Scalar]]) -> Matrix:
    """Solve ``a X = b`` for square nonsingular ``a`` (b given as columns in rows)."""
    n = len(a)
    if is_exact_matrix(a) and is_exact_matrix(b):
        aug = [list(a[i]) + list(b[i]) for i in range(n)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
            if pivot is None:
                raise InvalidInput("singular matrix")
            aug[col], aug[pivot] = aug[pivot], aug[col]
            p = aug[col][col]
            aug[col] = [div(x, p) for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return tuple(tuple(row[n:]) for row in aug)
    out = np.linalg.solve(to_numpy(a), to_numpy(b))
    return from_numpy(out)


def inverse(a: Sequence[Sequence[Scalar]]) -> Matrix:
    return solve(a, identity(len(a)))


def max_abs(m: Sequence[Sequence[Scalar]]) -> float:
    return max((float(abs(value_part(x))) for row in m for x in row), default=0.0)
