"""Dimension-generic geometric kernel.

Points are plain ``numpy`` arrays of doubles (any ambient dimension from 2
to 5 is exercised in practice).  Circumcenters are solved in the affine
hull of their defining points, with an exact rational fallback when the
system is badly conditioned, so that sliver simplices still produce
trustworthy centers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .predicates import in_sphere, orientation  # noqa: F401  (re-exported)
from .tolerances import DEFAULT, Tolerances


def as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError("a point is a 1-d coordinate array")
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite coordinate")
    return p


def as_points(xs) -> np.ndarray:
    pts = np.asarray(xs, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinate")
    return pts


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius < 0:
            raise ValueError("negative radius")

    def contains(self, x, strict: bool = True) -> bool:
        d = float(np.linalg.norm(as_point(x) - self.center))
        return d < self.radius if strict else d <= self.radius


@dataclass(frozen=True)
class AffineFlat:
    """Affine subspace given by a base point and an orthonormal frame."""

    base: np.ndarray
    directions: np.ndarray  # (k, d), orthonormal rows; k may be 0
    tol: Tolerances = field(default=DEFAULT, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[1] != self.base.shape[0]:
            raise ValueError("directions must be a (k, d) array")
        if dirs.shape[0]:
            gram = dirs @ dirs.T
            if not np.allclose(gram, np.eye(dirs.shape[0]), atol=self.tol.flat_orthonormal):
                raise ValueError("directions not orthonormal")
        object.__setattr__(self, "directions", dirs)

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.base.shape[0]

    def project(self, x) -> np.ndarray:
        rel = as_point(x) - self.base
        return self.base + self.directions.T @ (self.directions @ rel)

    def coords(self, x) -> np.ndarray:
        return self.directions @ (as_point(x) - self.base)

    def point_at(self, y) -> np.ndarray:
        return self.base + self.directions.T @ np.asarray(y, dtype=float)

    def distance(self, x) -> float:
        return float(np.linalg.norm(as_point(x) - self.project(x)))


@dataclass(frozen=True)
class Circumsphere:
    center: np.ndarray
    radius: float
    cond: float
    exact: bool

    def as_ball(self) -> Ball:
        return Ball(self.center, self.radius)


def _exact_gram_solve(vecs: list[np.ndarray]) -> list[Fraction]:
    """Solve G y = b exactly where G = V V^T and b_i = |v_i|^2 / 2."""
    k = len(vecs)
    rows = [[Fraction(x) for x in v] for v in vecs]
    g = [[sum(a * b for a, b in zip(rows[i], rows[j])) for j in range(k)] for i in range(k)]
    b = [sum(a * a for a in rows[i]) / 2 for i in range(k)]
    for col in range(k):
        piv = next((r for r in range(col, k) if g[r][col] != 0), None)
        if piv is None:
            raise ValueError("affinely degenerate input")
        g[col], g[piv] = g[piv], g[col]
        b[col], b[piv] = b[piv], b[col]
        inv = g[col][col]
        for r in range(k):
            if r != col and g[r][col] != 0:
                f = g[r][col] / inv
                for c in range(col, k):
                    g[r][c] -= f * g[col][c]
                b[r] -= f * b[col]
    return [b[i] / g[i][i] for i in range(k)]


def circumcenter(points, tol: Tolerances = DEFAULT, exact: str = "auto") -> Circumsphere:
    """Circumcenter of k+1 affinely independent points, inside their affine hull.

    Returns center, common radius and the condition number of the solved
    Gram system; the latter blows up like 1/delta^2 on slivers and is the
    cheap sliver detector used by the verification scenes.
    """
    pts = as_points(points)
    k = pts.shape[0] - 1
    if k < 0:
        raise ValueError("need at least one point")
    if k == 0:
        return Circumsphere(pts[0].copy(), 0.0, 1.0, False)
    if k > pts.shape[1]:
        raise ValueError("more points than an affine hull in this dimension allows")
    vecs = pts[1:] - pts[0]
    gram = vecs @ vecs.T
    rhs = 0.5 * np.einsum("ij,ij->i", vecs, vecs)
    try:
        cond = float(np.linalg.cond(gram))
    except np.linalg.LinAlgError:  # pragma: no cover
        cond = np.inf
    scale = float(np.max(np.abs(vecs))) or 1.0
    use_exact = exact == "always" or (
        exact == "auto" and (not np.isfinite(cond) or cond > 1e6)
    )
    if use_exact:
        y = _exact_gram_solve([v for v in vecs])
        center = pts[0] + np.array(
            [float(sum(Fraction(vecs[i][j]) * y[i] for i in range(k))) for j in range(pts.shape[1])]
        )
        is_exact = True
    else:
        try:
            y = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            raise ValueError("affinely degenerate input")
        center = pts[0] + vecs.T @ y
        is_exact = False
    dists = np.linalg.norm(pts - center, axis=1)
    radius = float(np.mean(dists))
    spread = float(np.max(dists) - np.min(dists))
    if radius > 0 and spread > 100 * tol.geometric_residual * max(radius, scale):
        if not use_exact and exact == "auto":
            return circumcenter(points, tol=tol, exact="always")
        raise ValueError(f"circumcenter residual too large: spread={spread:.3e}")
    return Circumsphere(center, radius, cond, is_exact)


def equidistant_flat(points, tol: Tolerances = DEFAULT) -> AffineFlat:
    """The affine flat of points equidistant from all k+1 given points.

    Has dimension d-k; it is the affine hull of the Voronoi face dual to
    the simplex on those points.
    """
    pts = as_points(points)
    d = pts.shape[1]
    k = pts.shape[0] - 1
    cs = circumcenter(pts, tol=tol)
    if k == 0:
        dirs = np.eye(d)
    else:
        vecs = pts[1:] - pts[0]
        # null space of the bisector normals
        _, s, vt = np.linalg.svd(vecs, full_matrices=True)
        rank = int(np.sum(s > max(s[0], 1.0) * 1e-12)) if s.size else 0
        if rank < k:
            raise ValueError("affinely degenerate input")
        dirs = vt[rank:]
    return AffineFlat(cs.center, dirs, tol=tol)


def angle_with_direction(flat: AffineFlat, axis) -> float:
    """Smallest angle between a flat's direction span and a line, in [0, pi/2]."""
    if flat.dim == 0:
        raise ValueError("zero-dimensional flat has no directions")
    a = as_point(axis)
    n = float(np.linalg.norm(a))
    if n == 0:
        raise ValueError("zero axis")
    a = a / n
    proj = float(np.linalg.norm(flat.directions @ a))
    return float(np.arccos(np.clip(proj, 0.0, 1.0)))


def principal_angles(dirs_a: np.ndarray, dirs_b: np.ndarray) -> np.ndarray:
    """Principal angles between two direction spans (orthonormal rows)."""
    m = np.asarray(dirs_a, dtype=float) @ np.asarray(dirs_b, dtype=float).T
    sv = np.linalg.svd(m, compute_uv=False)
    return np.arccos(np.clip(np.sort(sv)[::-1], -1.0, 1.0))
