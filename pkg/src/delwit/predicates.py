"""Adaptive-precision geometric predicates.

Signs of small determinants (orientation, in-sphere) are computed with a
floating-point filter and, when the filter cannot certify the sign, an
exact fallback.  Doubles are dyadic rationals, so evaluating the same
determinant over ``fractions.Fraction`` entries is exact; the fallback
scales the matrix to integers and runs fraction-free Bareiss elimination.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# Filter bound: the cofactor expansion below performs fewer than 2^7
# floating operations per term for n <= 6, each with relative error
# 2^-53, so perm * 2^-45 over-covers the worst-case rounding error.
_FILTER_EPS = 2.0 ** -45

_MAX_N = 7


def _det_perm(rows: list[list[float]], active: list[int], col: int, n: int) -> tuple[float, float]:
    """Cofactor expansion returning (determinant, permanent of |entries|)."""
    if col == n - 1:
        i = active[0]
        v = rows[i][col]
        return v, abs(v)
    det = 0.0
    perm = 0.0
    sign = 1.0
    for k, i in enumerate(active):
        v = rows[i][col]
        if v != 0.0:
            sub = active[:k] + active[k + 1:]
            d, p = _det_perm(rows, sub, col + 1, n)
            det += sign * v * d
            perm += abs(v) * p
        sign = -sign
    return det, perm


def _exact_sign(rows: list[list[float]]) -> int:
    """Exact determinant sign via integer Bareiss elimination."""
    n = len(rows)
    fracs = [[Fraction(x) for x in row] for row in rows]
    # common power-of-two denominator
    denom = 1
    for row in fracs:
        for f in row:
            denom = max(denom, f.denominator)
    m = [[int(f * denom) for f in row] for row in fracs]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            pivot = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if pivot is None:
                return 0
            m[k], m[pivot] = m[pivot], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    v = m[n - 1][n - 1]
    return sign * (0 if v == 0 else (1 if v > 0 else -1))


def sign_det(matrix) -> int:
    """Certified sign of det(matrix) for small matrices of doubles."""
    rows = [[float(x) for x in row] for row in matrix]
    n = len(rows)
    if n == 0:
        return 1
    if any(len(r) != n for r in rows):
        raise ValueError("square matrix required")
    if n >= _MAX_N:
        raise ValueError("predicate matrices are expected to stay small")
    det, perm = _det_perm(rows, list(range(n)), 0, n)
    if abs(det) > perm * _FILTER_EPS:
        return 1 if det > 0 else -1
    return _exact_sign(rows)


def _as_point_list(points) -> list[np.ndarray]:
    pts = [np.asarray(p, dtype=float) for p in points]
    if not pts:
        raise ValueError("empty point list")
    d = pts[0].shape[-1]
    for p in pts:
        if p.shape != (d,):
            raise ValueError("points of mixed dimension")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite coordinate")
    return pts


def orientation(points) -> int:
    """Sign of the simplex spanned by d+1 points in R^d (0 iff degenerate)."""
    pts = _as_point_list(points)
    d = pts[0].shape[0]
    if len(pts) != d + 1:
        raise ValueError(f"orientation in R^{d} needs {d + 1} points, got {len(pts)}")
    rows = [(pts[i + 1] - pts[0]).tolist() for i in range(d)]
    return sign_det(rows)


def in_sphere(points, query) -> int:
    """-1 if query lies strictly inside the circumsphere of the d+1 points,
    +1 if strictly outside, 0 if on it.

    Independent of the vertex ordering of the simplex.
    """
    pts = _as_point_list(points)
    q = np.asarray(query, dtype=float)
    d = pts[0].shape[0]
    if len(pts) != d + 1:
        raise ValueError(f"in_sphere in R^{d} needs {d + 1} simplex points")
    orient = orientation(pts)
    if orient == 0:
        raise ValueError("degenerate simplex has no circumsphere")
    rows = []
    for p in pts:
        rel = p - q
        rows.append(rel.tolist() + [float(rel @ rel)])
    lifted = sign_det(rows)
    # Row layout (p_i - q, |p_i - q|^2): an interior query satisfies
    # orient * lifted * (-1)^(d+1) == -1 (calibrated for d = 1..5).
    parity = -1 if d % 2 == 0 else 1
    return lifted * orient * parity
