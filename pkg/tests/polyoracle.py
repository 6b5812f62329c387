"""Dense univariate polynomials over Fractions, lowest degree first.

Used as an independent oracle for characteristic polynomials.
"""

from __future__ import annotations

from fractions import Fraction


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def poly_divmod(a, b):
    a, b = _trim([Fraction(x) for x in a]), _trim([Fraction(x) for x in b])
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = c
        a = _trim([x - (c * b[i - k] if 0 <= i - k < len(b) else 0) for i, x in enumerate(a)])
    return _trim(q), a


def poly_monic(p):
    p = _trim([Fraction(x) for x in p])
    return [x / p[-1] for x in p]


def det_cofactor(M):
    """Determinant by Laplace expansion along the first row."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = []
    for j in range(n):
        if not M[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = poly_mul(M[0][j], det_cofactor(minor))
        total = poly_add(total, term if j % 2 == 0 else [-x for x in term])
    return total


def charpoly_cofactor(A):
    """det(sI - A) as a coefficient list."""
    n = len(A)
    M = [[_trim([-Fraction(A[i][j]), Fraction(1 if i == j else 0)]) for j in range(n)] for i in range(n)]
    return det_cofactor(M)
