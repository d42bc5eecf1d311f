"""
Exact rational linear algebra for the small boundary matrices.

Matrices are lists of rows of Fractions; sizes here never exceed 8x8.
"""
from fractions import Fraction
from typing import List, Sequence

from src.core.errors import SingularSystem

Matrix = List[List[Fraction]]


def to_fractions(rows: Sequence[Sequence]) -> Matrix:
    # Fraction(float) is exact, so float data loses nothing here
    return [[Fraction(v) for v in row] for row in rows]


def _eliminate(m: Matrix, rhs: List[Fraction] = None):
    """Row-reduce in place; returns (sign, pivot columns)."""
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    sign = 1
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        # largest magnitude pivot keeps intermediate numbers small
        p = max(range(r, n_rows), key=lambda i: abs(m[i][c]))
        if m[p][c] == 0:
            continue
        if p != r:
            m[r], m[p] = m[p], m[r]
            if rhs is not None:
                rhs[r], rhs[p] = rhs[p], rhs[r]
            sign = -sign
        for i in range(r + 1, n_rows):
            if m[i][c] == 0:
                continue
            lam = m[i][c] / m[r][c]
            m[i] = [x - lam * y for x, y in zip(m[i], m[r])]
            if rhs is not None:
                rhs[i] -= lam * rhs[r]
        pivots.append(c)
        r += 1
    return sign, pivots


def det_exact(rows: Sequence[Sequence]) -> Fraction:
    m = to_fractions(rows)
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return Fraction(1)
    sign, pivots = _eliminate(m)
    if len(pivots) < n:
        return Fraction(0)
    det = Fraction(sign)
    for i in range(n):
        det *= m[i][i]
    return det


def rank_exact(rows: Sequence[Sequence]) -> int:
    m = to_fractions(rows)
    if not m:
        return 0
    return len(_eliminate(m)[1])


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> List[Fraction]:
    """Solve a square system exactly; raises SingularSystem if det = 0."""
    m = to_fractions(rows)
    b = [Fraction(v) for v in rhs]
    n = len(m)
    _, pivots = _eliminate(m, b)
    if len(pivots) < n:
        raise SingularSystem(f"exact {n}x{n} system has rank {len(pivots)}")
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = b[i] - sum(m[i][j] * x[j] for j in range(i + 1, n))
        x[i] = acc / m[i][i]
    return x


def vandermonde_det_closed_form(nodes: Sequence[int]) -> int:
    """
    det of the rows [(-x)^(n-1), ..., -x, 1]:
    (-1)^(n(n-1)/2) * prod_{p<r} (x_p - x_r).
    """
    n = len(nodes)
    prod = 1
    for p in range(n):
        for r in range(p + 1, n):
            prod *= nodes[p] - nodes[r]
    return (-1) ** (n * (n - 1) // 2) * prod
