"""Exact rational linear algebra on top of python-flint.

Matrices are passed around as lists of rows of ``Fraction`` (or int).
"""

from fractions import Fraction
from math import lcm

import flint


def _fq(x):
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return flint.fmpq(x)


def _frac(x):
    return Fraction(int(x.p), int(x.q))


def to_fmpq(rows, ncols=None):
    rows = list(rows)
    m = len(rows)
    n = len(rows[0]) if rows else (ncols or 0)
    return flint.fmpq_mat(m, n, [_fq(v) for row in rows for v in row])


def to_fmpz_rows(rows):
    """Scale each row by the lcm of its denominators; returns fmpz_mat."""
    rows = list(rows)
    m = len(rows)
    n = len(rows[0]) if rows else 0
    ents = []
    for row in rows:
        den = 1
        for v in row:
            if isinstance(v, Fraction) and v.denominator != 1:
                den = lcm(den, v.denominator)
        for v in row:
            v = Fraction(v) * den
            ents.append(int(v))
    return flint.fmpz_mat(m, n, ents)


def from_fmpq(M):
    return [[_frac(M[i, j]) for j in range(M.ncols())] for i in range(M.nrows())]


def rank(rows):
    rows = list(rows)
    if not rows or not len(rows[0]):
        return 0
    return to_fmpz_rows(rows).rank()


def rref_rows(rows):
    """Nonzero rows of the reduced row echelon form."""
    rows = list(rows)
    if not rows:
        return []
    R, rk = to_fmpq(rows).rref()
    return [[_frac(R[i, j]) for j in range(R.ncols())] for i in range(rk)]


def pivots(R):
    out = []
    for row in R:
        for j, v in enumerate(row):
            if v:
                out.append(j)
                break
    return out


def nullspace(rows, ncols=None):
    """Basis of {x : A x = 0} as a list of Fraction vectors."""
    rows = list(rows)
    n = len(rows[0]) if rows else ncols
    R = rref_rows(rows) if rows else []
    piv = pivots(R)
    free = [j for j in range(n) if j not in set(piv)]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, p in zip(R, piv):
            x[p] = -row[f]
        basis.append(x)
    return basis


def det(rows):
    return _frac(to_fmpq(rows).det())


def inverse(rows):
    return from_fmpq(to_fmpq(rows).inv())


def solve(rows, rhs_cols):
    """Solve A X = B with B given as a list of rows."""
    X = to_fmpq(rows).solve(to_fmpq(rhs_cols))
    return from_fmpq(X)


def matmul(A, B):
    return from_fmpq(to_fmpq(A) * to_fmpq(B))


def same_row_space(A, B):
    A, B = list(A), list(B)
    if not A or not B:
        return rank(A) == 0 if A else (rank(B) == 0 if B else True)
    ra, rb = rank(A), rank(B)
    return ra == rb and rank(A + B) == ra
