"""Sampling of implicit surfaces.

``background_cloud`` produces a deterministic finite stand-in for "every
point of the surface": a lattice on an enclosing shape pushed onto the
surface by the closed-form base projection (nonexpansive, so the lattice
covering radius survives), then polished onto the bumped field where
needed.  ``farthest_point_sample`` runs the classic greedy insertion
against that cloud, which keeps an exact cover radius certificate at all
times.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import Ball
from .manifold import (
    BumpedHypercube,
    ImplicitSurface,
    SphereField,
    TorusField,
)
from .tolerances import DEFAULT, Tolerances

MAX_CLOUD_POINTS = 10 ** 7

_USE_NUMBA = os.environ.get("DELWIT_NO_NUMBA", "") == ""
if _USE_NUMBA:
    try:
        import numba

        @numba.njit(parallel=True, cache=True, fastmath=True)
        def _relax_d2(cloud, d2, new_pt):  # pragma: no cover - jitted
            n, d = cloud.shape
            for i in numba.prange(n):
                acc = 0.0
                for j in range(d):
                    diff = cloud[i, j] - new_pt[j]
                    acc += diff * diff
                if acc < d2[i]:
                    d2[i] = acc

        @numba.njit(parallel=True, cache=True, fastmath=True)
        def _min_d2_to_set(cloud, pts, out):  # pragma: no cover - jitted
            n, d = cloud.shape
            m = pts.shape[0]
            for i in numba.prange(n):
                best = np.inf
                for k in range(m):
                    acc = 0.0
                    for j in range(d):
                        diff = cloud[i, j] - pts[k, j]
                        acc += diff * diff
                    if acc < best:
                        best = acc
                out[i] = best
    except Exception:  # pragma: no cover
        _USE_NUMBA = False

if not _USE_NUMBA:
    def _relax_d2(cloud, d2, new_pt):
        np.minimum(d2, ((cloud - new_pt) ** 2).sum(axis=1), out=d2)

    def _min_d2_to_set(cloud, pts, out):
        out[:] = np.inf
        for k in range(len(pts)):
            np.minimum(out, ((cloud - pts[k]) ** 2).sum(axis=1), out=out)


def checksum(points: np.ndarray) -> str:
    rounded = np.round(np.asarray(points, dtype=float), 9) + 0.0
    return hashlib.sha256(rounded.tobytes()).hexdigest()[:16]


def min_pairwise_distance(points: np.ndarray, chunk: int = 1024) -> float:
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        return math.inf
    best = math.inf
    for i in range(0, n, chunk):
        block = pts[i : i + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(len(block))
        d2[rows, i + rows] = np.inf
        best = min(best, float(np.sqrt(d2.min())))
    return best


def covering_radius(cloud: np.ndarray, landmarks: np.ndarray) -> float:
    """max over cloud points of the distance to the landmark set."""
    out = np.empty(len(cloud))
    _min_d2_to_set(
        np.ascontiguousarray(cloud, dtype=float),
        np.ascontiguousarray(landmarks, dtype=float),
        out,
    )
    return float(np.sqrt(out.max()))


# ---------------------------------------------------------------------------
# background clouds


def _facet_lattice_1d(width: float, step: float) -> np.ndarray:
    n = max(2, int(math.ceil(2 * width / step)) + 1)
    return np.linspace(-width, width, n)


def _hypercube_cloud(m: BumpedHypercube, spacing: float, tol: Tolerances) -> np.ndarray:
    d = m.dim
    w = m.width
    facet_dim = d - 1
    if facet_dim == 3:
        step = spacing * 4.0 / math.sqrt(5.0)  # BCC covering radius sqrt(5)/4 * step
    else:
        step = spacing * 2.0 / math.sqrt(facet_dim)
    axes_1d = _facet_lattice_1d(w, step)
    grids = np.meshgrid(*([axes_1d] * facet_dim), indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    if facet_dim == 3:
        offs = flat[:-1] if len(flat) else flat
        offs = flat + step / 2.0
        offs = offs[np.all(offs <= w, axis=1)]
        flat = np.vstack([flat, offs])
    pieces = []
    for axis in range(d):
        for sign in (-1.0, 1.0):
            pts = np.empty((len(flat), d))
            cols = [c for c in range(d) if c != axis]
            pts[:, cols] = flat
            pts[:, axis] = sign * w
            pieces.append(pts)
    big = np.vstack(pieces)
    if len(big) > MAX_CLOUD_POINTS:
        raise MemoryError(f"cloud of {len(big)} points exceeds the budget")
    base_pts = m.base_project(big)
    base_pts = np.unique(np.round(base_pts, 9), axis=0)
    # polish points whose facet position sits inside a bump support
    if m.bumps:
        touched = np.zeros(len(base_pts), dtype=bool)
        for b in m.bumps:
            c = np.asarray(b.center)
            i = b.axis_index
            perp = base_pts - c
            perp[:, i] = 0.0
            rr = np.linalg.norm(perp, axis=1)
            near_height = np.abs(b.axis_sign * base_pts[:, i] - w) < w / 4.0
            touched |= (rr < b.radius) & near_height
        if np.any(touched):
            base_pts[touched] = m.project(base_pts[touched], tol=tol)
    return base_pts


def _sphere_cloud(m: SphereField, spacing: float) -> np.ndarray:
    r = m.radius
    c = np.asarray(m.center, dtype=float)
    if m.dim == 2:
        n = max(8, int(math.ceil(math.pi * r / spacing)) + 1)
        ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        return c + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if m.dim != 3:
        raise ValueError("sphere clouds implemented for dimensions 2 and 3")
    n = max(32, int(math.ceil(12.5 * (r / spacing) ** 2)))
    if n > MAX_CLOUD_POINTS:
        raise MemoryError(f"cloud of {n} points exceeds the budget")
    i = np.arange(n)
    golden = math.pi * (3.0 - math.sqrt(5.0))
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    th = golden * i
    pts = np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=1)
    return c + r * pts


def _torus_cloud(m: TorusField, spacing: float) -> np.ndarray:
    side = spacing * math.sqrt(2.0)
    n_th = max(8, int(math.ceil(2 * math.pi * (m.major + m.minor) / side)))
    n_ph = max(8, int(math.ceil(2 * math.pi * m.minor / side)))
    if n_th * n_ph > MAX_CLOUD_POINTS:
        raise MemoryError("torus cloud exceeds the budget")
    th = np.linspace(0, 2 * math.pi, n_th, endpoint=False)
    ph = np.linspace(0, 2 * math.pi, n_ph, endpoint=False)
    T, P = np.meshgrid(th, ph, indexing="ij")
    rho = m.major + m.minor * np.cos(P)
    return np.stack(
        [rho * np.cos(T), rho * np.sin(T), m.minor * np.sin(P)], axis=-1
    ).reshape(-1, 3)


def background_cloud(
    surface: ImplicitSurface, spacing: float, tol: Tolerances = DEFAULT
) -> np.ndarray:
    """Deterministic on-surface point cloud with covering radius <= spacing."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if isinstance(surface, BumpedHypercube):
        cloud = _hypercube_cloud(surface, spacing, tol)
    elif isinstance(surface, SphereField):
        cloud = _sphere_cloud(surface, spacing)
    elif isinstance(surface, TorusField):
        cloud = _torus_cloud(surface, spacing)
    else:
        raise TypeError(f"no cloud generator for {type(surface).__name__}")
    resid = np.abs(surface.field(cloud))
    worst = float(resid.max())
    if worst > tol.on_surface:
        bad = resid > tol.field_zero
        cloud = cloud.copy()
        cloud[bad] = surface.project(cloud[bad], tol=tol)
        worst = float(np.abs(surface.field(cloud)).max())
        if worst > tol.on_surface:
            raise RuntimeError(f"cloud points off surface by {worst:.2e}")
    return cloud


# ---------------------------------------------------------------------------
# landmark sets


@dataclass(frozen=True)
class LandmarkSet:
    points: np.ndarray
    epsilon: float
    sparsity: float
    density: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def index_of(self, point, tol: float = 1e-9) -> int:
        d = np.linalg.norm(self.points - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise KeyError(f"no landmark within {tol} of {point}")
        return i


class SeedError(ValueError):
    pass


def farthest_point_sample(
    surface: ImplicitSurface,
    seeds,
    epsilon: float,
    cloud: np.ndarray,
    tol: Tolerances = DEFAULT,
) -> LandmarkSet:
    """Greedy insertion of the farthest cloud point until the cloud is
    covered at radius 2*epsilon.  Seeds are kept verbatim and must be
    epsilon-separated points of the surface.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if np.any(np.abs(surface.field(seeds)) > tol.on_surface):
        raise SeedError("seed off the surface")
    if len(seeds) > 1 and min_pairwise_distance(seeds) < epsilon * (1 - 1e-12):
        raise SeedError("seeds closer than epsilon")
    cloud = np.ascontiguousarray(cloud, dtype=float)
    d2 = np.empty(len(cloud))
    _min_d2_to_set(cloud, np.ascontiguousarray(seeds), d2)
    picked: list[int] = []
    cap = (2.0 * epsilon) ** 2
    while True:
        j = int(np.argmax(d2))
        if d2[j] <= cap:
            break
        picked.append(j)
        _relax_d2(cloud, d2, cloud[j])
    pts = np.vstack([seeds, cloud[picked]]) if picked else seeds.copy()
    density = float(np.sqrt(d2.max()))
    sparsity = min_pairwise_distance(pts)
    return LandmarkSet(
        points=pts,
        epsilon=epsilon,
        sparsity=sparsity,
        density=density,
        provenance={
            "seeds": len(seeds),
            "cloud_checksum": checksum(cloud),
            "inserted": len(picked),
            "excisions": [],
        },
    )


def _remeasure(L: LandmarkSet, cloud: np.ndarray | None) -> LandmarkSet:
    sparsity = min_pairwise_distance(L.points)
    density = L.density
    if cloud is not None:
        density = covering_radius(cloud, L.points)
    return replace(L, sparsity=sparsity, density=density)


def excise_ball(
    L: LandmarkSet,
    ball: Ball,
    protected,
    cloud: np.ndarray | None = None,
) -> LandmarkSet:
    """Delete unprotected landmarks strictly inside the ball.

    Protected landmarks must lie on the bounding sphere or outside it.
    """
    protected = set(int(i) for i in protected)
    d2 = ((L.points - ball.center) ** 2).sum(axis=1)
    r2 = ball.radius ** 2
    inside = d2 < r2 * (1 - 1e-12)
    for i in np.nonzero(inside)[0]:
        if int(i) in protected:
            raise ValueError(f"protected landmark {int(i)} strictly inside the ball")
    keep = ~inside
    out = replace(L, points=L.points[keep])
    out.provenance.update(L.provenance)
    out.provenance["excisions"] = list(L.provenance.get("excisions", [])) + [
        {
            "center": list(map(float, ball.center)),
            "radius": float(ball.radius),
            "deleted": int(inside.sum()),
        }
    ]
    return _remeasure(out, cloud)


def insert_landmark(L: LandmarkSet, point, cloud: np.ndarray | None = None) -> LandmarkSet:
    pts = np.vstack([L.points, np.asarray(point, dtype=float)[None, :]])
    return _remeasure(replace(L, points=pts), cloud)


def substitute_landmark(
    L: LandmarkSet, old_index: int, new_point, cloud: np.ndarray | None = None
) -> LandmarkSet:
    """Replace one landmark by a new point (the seed-swap move)."""
    pts = L.points.copy()
    pts[old_index] = np.asarray(new_point, dtype=float)
    return _remeasure(replace(L, points=pts), cloud)


def landmarks_to_json_dict(L: LandmarkSet) -> dict:
    return {
        "epsilon": L.epsilon,
        "sparsity": L.sparsity,
        "density": L.density,
        "provenance": L.provenance,
        "points": [list(map(float, p)) for p in L.points],
    }
