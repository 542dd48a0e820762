"""Gaussian elimination over the rationals.

Matrices are lists of rows of ``Fraction``. Nothing here ever rounds.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


def to_fraction(value) -> Fraction:
    """Coerce ints, ``Fraction`` and rational strings ("3/4", "0.25") exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        # floats are binary rationals; keep them exact rather than guessing
        return Fraction(value)
    try:
        import sympy

        if isinstance(value, sympy.Rational):
            return Fraction(int(value.p), int(value.q))
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def frac_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[to_fraction(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [
        [sum((row[t] * b[t][j] for t in range(inner)), Fraction(0)) for j in range(cols)]
        for row in a
    ]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def row_echelon(m: Matrix, rhs: list[Fraction] | None = None):
    """Reduce a copy of ``m`` to reduced row echelon form.

    First nonzero entry in the column is taken as pivot. Returns
    ``(rref, rhs, pivot_columns)``.
    """
    a = [list(row) for row in m]
    b = None if rhs is None else list(rhs)
    n_rows = len(a)
    n_cols = len(a[0]) if n_rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        p = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[r], a[p] = a[p], a[r]
            if b is not None:
                b[r], b[p] = b[p], b[r]
        piv = a[r][c]
        a[r] = [x / piv for x in a[r]]
        if b is not None:
            b[r] = b[r] / piv
        for i in range(n_rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                if b is not None:
                    b[i] = b[i] - f * b[r]
        pivots.append(c)
        r += 1
    return a, b, pivots


def rank(m: Matrix) -> int:
    if not m or not m[0]:
        return 0
    return len(row_echelon(m)[2])


def solve(m: Matrix, rhs: Sequence) -> list[Fraction] | None:
    """One exact solution of ``m x = rhs`` (free variables set to zero), or None."""
    rhs = [to_fraction(x) for x in rhs]
    n_cols = len(m[0]) if m else 0
    a, b, pivots = row_echelon(m, rhs)
    for i in range(len(pivots), len(a)):
        if b[i] != 0:
            return None
    x = [Fraction(0)] * n_cols
    for i, c in enumerate(pivots):
        x[c] = b[i]
    return x


def det(m: Matrix) -> Fraction:
    n = len(m)
    if n == 0:
        return Fraction(1)
    a = [list(row) for row in m]
    sign = 1
    out = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            sign = -sign
        piv = a[c][c]
        out *= piv
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] / piv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return out * sign


def inverse(m: Matrix) -> Matrix:
    n = len(m)
    aug = [list(row) + identity(n)[i] for i, row in enumerate(m)]
    red, _, pivots = row_echelon(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in red]
