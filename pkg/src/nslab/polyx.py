"""Exact polynomial algebra on interval/box domains.

Polynomials are coefficient sequences in the monomial basis (ascending
powers), with Fraction coefficients in exact mode; 2D polynomials are tensor
coefficient matrices c[i][j] x^i y^j.  Used by the moment machinery where the
Hilbert-matrix conditioning makes floating arithmetic meaningless.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def as_exact(coeffs):
    return [c if isinstance(c, Fraction) else Fraction(c) for c in coeffs]


def p_eval(coeffs, x):
    acc = 0 * x if isinstance(x, np.ndarray) else type(coeffs[0])(0) if coeffs else 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def p_add(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def p_scale(p, a):
    return [a * c for c in p]


def p_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def p_deriv(p):
    return [i * c for i, c in enumerate(p)][1:] or [0 * p[0]]


def p_antideriv(p):
    return [0 * p[0]] + [c / Fraction(i + 1) if isinstance(c, (Fraction, int)) else c / (i + 1)
                         for i, c in enumerate(p)]


def p_integral(p, a, b):
    P = p_antideriv(p)
    return p_eval(P, b) - p_eval(P, a)


def p_l2sq(p, a, b):
    return p_integral(p_mul(p, p), a, b)


def p_moment(p, j, a, b):
    """int_a^b x^j p(x) dx."""
    shifted = [0] * j + list(p)
    return p_integral(shifted, a, b)


def p_compose_affine(p, c0, c1):
    """Coefficients of p(c0 + c1 t), by Horner composition."""
    acc = [p[-1]]
    lin = [c0, c1]
    for c in reversed(p[:-1]):
        acc = p_add(p_mul(acc, lin), [c])
    return acc


# --- 2D tensor polynomials -------------------------------------------------

def p2_eval(c, x, y):
    rows = [p_eval(list(row), y) for row in c]
    return p_eval(rows, x)


def p2_partial(c, axis):
    c = [list(r) for r in c]
    if axis == 0:
        out = [[(i + 1) * c[i + 1][j] for j in range(len(c[0]))] for i in range(len(c) - 1)]
        return out or [[0 * c[0][0]]]
    out = [[(j + 1) * row[j + 1] for j in range(len(row) - 1)] or [0 * row[0]] for row in c]
    return out


def p2_mul(a, b):
    na, ma = len(a), len(a[0])
    nb, mb = len(b), len(b[0])
    out = [[0] * (ma + mb - 1) for _ in range(na + nb - 1)]
    for i in range(na):
        for j in range(ma):
            if a[i][j] == 0:
                continue
            for k in range(nb):
                for l in range(mb):
                    out[i + k][j + l] += a[i][j] * b[k][l]
    return out


def p2_integral(c, box):
    """int over box = (ax,bx) x (ay,by)."""
    (ax, bx), (ay, by) = box
    total = 0
    for i, row in enumerate(c):
        fx = (Fraction(bx) ** (i + 1) - Fraction(ax) ** (i + 1)) / (i + 1) \
            if isinstance(row[0], Fraction) else (bx ** (i + 1) - ax ** (i + 1)) / (i + 1)
        for j, cij in enumerate(row):
            if cij == 0:
                continue
            fy = (Fraction(by) ** (j + 1) - Fraction(ay) ** (j + 1)) / (j + 1) \
                if isinstance(cij, Fraction) else (by ** (j + 1) - ay ** (j + 1)) / (j + 1)
            total += cij * fx * fy
    return total


def p2_moment(c, jx, jy, box):
    shifted = [[0] * jy + list(r) for r in c]
    shifted = [[0] * len(shifted[0])] * jx + shifted
    return p2_integral(shifted, box)


def p2_l2sq(c, box):
    return p2_integral(p2_mul(c, c), box)
