"""Exact linear algebra: rational Gaussian elimination, Bareiss determinant."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .errors import NotSquare
from .ratcore import Poly


def rank(matrix: list[list[Fraction]]) -> int:
    """Rank of a matrix with exact rational entries."""
    m = [row[:] for row in matrix]
    if not m:
        return 0
    rows, cols = len(m), len(m[0])
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        for i in range(r + 1, rows):
            f = m[i][c] / pv
            if f:
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == rows:
            break
    return r


def solve(matrix: list[list[Fraction]], rhs: list[Fraction]) -> Optional[list[Fraction]]:
    """One exact solution of A x = b (free variables set to 0), or None."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    m = [matrix[i][:] + [rhs[i]] for i in range(rows)]
    piv_cols = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [a / pv for a in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if m[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(piv_cols):
        x[c] = m[i][cols]
    return x


def det_bareiss(matrix: list[list[Poly]]) -> Poly:
    """Determinant of a polynomial matrix by fraction-free elimination."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise NotSquare("determinant of a non-square matrix")
    if n == 0:
        return Poly.const(1)
    m = [row[:] for row in matrix]
    sign = 1
    prev = Poly.const(1)
    for k in range(n - 1):
        if m[k][k].is_zero():
            pivot = next((i for i in range(k + 1, n) if not m[i][k].is_zero()), None)
            if pivot is None:
                return Poly()
            m[k], m[pivot] = m[pivot], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev)
            m[i][k] = Poly()
        prev = m[k][k]
    d = m[n - 1][n - 1]
    return d if sign == 1 else -d
