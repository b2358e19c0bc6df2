"""Implicit hypersurfaces: smoothed hypercube with bump deformations, plus
sphere/torus/circle control surfaces.

Every surface is the zero set of a scalar field (negative inside), with an
analytic gradient.  The hypercube base field is the distance to the solid
cube minus half the width; inside the cube it is the constant -width/2,
which keeps the sign correct everywhere the constructions look.

Bumps displace a flat facet outward.  The radial profile is a C^1 two-arc
polynomial ``P(s) = 1 - 2 s^2`` then ``2 (1 - s)^2`` whose extremal second
derivative is 4 h / rho^2, so a support radius ``rho = k sqrt(h W)`` with
``k >= sqrt(2)`` keeps every curvature radius at or above ``W/2``.  The
default factor 1.45 leaves ~5% headroom while keeping neighbouring bumps
disjoint in the constructions; callers may shrink supports further, at a
recorded cost in curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .tolerances import DEFAULT, Tolerances

SUPPORT_FACTOR = 1.45  # default rho / sqrt(h * width)


class ProjectionError(RuntimeError):
    pass


class BumpPlacementError(ValueError):
    pass


class RidgeInfeasibleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# profile pieces


def _profile(s: np.ndarray) -> np.ndarray:
    s = np.abs(s)
    out = np.zeros_like(s)
    inner = s <= 0.5
    outer = (s > 0.5) & (s < 1.0)
    out[inner] = 1.0 - 2.0 * s[inner] ** 2
    out[outer] = 2.0 * (1.0 - s[outer]) ** 2
    return out


def _profile_deriv(s: np.ndarray) -> np.ndarray:
    sig = np.sign(s)
    s = np.abs(s)
    out = np.zeros_like(s)
    inner = s <= 0.5
    outer = (s > 0.5) & (s < 1.0)
    out[inner] = -4.0 * s[inner]
    out[outer] = -4.0 * (1.0 - s[outer])
    return out * sig


def profile_inverse(value: float) -> float:
    """s with P(s) = value, for value in (0, 1]."""
    if not 0.0 < value <= 1.0:
        raise ValueError("profile values live in (0, 1]")
    if value >= 0.5:
        return math.sqrt((1.0 - value) / 2.0)
    return 1.0 - math.sqrt(value / 2.0)


def _window(tau: np.ndarray, plateau: float, cutoff: float) -> np.ndarray:
    a = np.abs(tau)
    out = np.zeros_like(a)
    out[a <= plateau] = 1.0
    mid = (a > plateau) & (a < cutoff)
    x = (a[mid] - plateau) / (cutoff - plateau)
    out[mid] = 1.0 - (3.0 * x ** 2 - 2.0 * x ** 3)
    return out


def _window_deriv(tau: np.ndarray, plateau: float, cutoff: float) -> np.ndarray:
    a = np.abs(tau)
    out = np.zeros_like(a)
    mid = (a > plateau) & (a < cutoff)
    x = (a[mid] - plateau) / (cutoff - plateau)
    out[mid] = -(6.0 * x - 6.0 * x ** 2) / (cutoff - plateau)
    return out * np.sign(tau)


# ---------------------------------------------------------------------------
# surfaces


class ImplicitSurface:
    """Scalar field with gradient; zero set is the surface, negative inside."""

    dim: int

    def field(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def reach_lower_bound(self) -> float:
        raise NotImplementedError

    def field_lipschitz(self) -> float:
        return 1.0

    def bounding_radius(self) -> float:
        raise NotImplementedError

    # generic Newton projection with bisection fallback
    def project(self, x, tol: Tolerances = DEFAULT, max_iter: int = 60) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        y = pts.copy()
        f = self.field(y)
        for _ in range(max_iter):
            live = np.abs(f) > tol.field_zero
            if not np.any(live):
                break
            g = self.gradient(y[live])
            gn = np.einsum("ij,ij->i", g, g)
            gn[gn == 0] = 1.0
            step = (f[live] / gn)[:, None] * g
            # damping guard against overshooting across the medial axis
            norm = np.linalg.norm(step, axis=1)
            cap = 0.25 * self.reach_lower_bound()
            big = norm > cap
            if np.any(big):
                step[big] *= (cap / norm[big])[:, None]
            y[live] = y[live] - step
            f = self.field(y)
        if np.any(np.abs(f) > tol.field_zero * 10):
            bad = int(np.argmax(np.abs(f)))
            raise ProjectionError(f"projection failed, residual {f[bad]:.3e}")
        out = y if np.asarray(x).ndim > 1 else y[0]
        return out

    def on_surface(self, x, tol: Tolerances = DEFAULT) -> bool:
        return bool(np.all(np.abs(self.field(np.atleast_2d(x))) <= tol.on_surface))


@dataclass(frozen=True)
class SphereField(ImplicitSurface):
    radius: float
    dim: int = 3
    center: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", tuple([0.0] * self.dim))

    def _c(self):
        return np.asarray(self.center, dtype=float)

    def field(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return np.linalg.norm(pts - self._c(), axis=1) - self.radius

    def gradient(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        rel = pts - self._c()
        n = np.linalg.norm(rel, axis=1, keepdims=True)
        n[n == 0] = 1.0
        return rel / n

    def reach_lower_bound(self):
        return self.radius

    def bounding_radius(self):
        return float(np.linalg.norm(self._c()) + self.radius)

    def project(self, x, tol: Tolerances = DEFAULT, max_iter: int = 60):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        rel = pts - self._c()
        n = np.linalg.norm(rel, axis=1, keepdims=True)
        if np.any(n == 0):
            raise ProjectionError("center projects ambiguously")
        y = self._c() + rel / n * self.radius
        return y if np.asarray(x).ndim > 1 else y[0]


@dataclass(frozen=True)
class TorusField(ImplicitSurface):
    major: float
    minor: float
    dim: int = 3

    def field(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        rho = np.linalg.norm(pts[:, :2], axis=1)
        return np.sqrt((rho - self.major) ** 2 + pts[:, 2] ** 2) - self.minor

    def gradient(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        rho = np.linalg.norm(pts[:, :2], axis=1)
        rho_safe = np.where(rho == 0, 1.0, rho)
        core = np.sqrt((rho - self.major) ** 2 + pts[:, 2] ** 2)
        core = np.where(core == 0, 1.0, core)
        g = np.empty_like(pts)
        g[:, 0] = (rho - self.major) / core * pts[:, 0] / rho_safe
        g[:, 1] = (rho - self.major) / core * pts[:, 1] / rho_safe
        g[:, 2] = pts[:, 2] / core
        return g

    def reach_lower_bound(self):
        return min(self.minor, self.major - self.minor)

    def bounding_radius(self):
        return self.major + self.minor


def CircleField(radius: float) -> SphereField:
    return SphereField(radius=radius, dim=2)


# ---------------------------------------------------------------------------
# smoothed hypercube with bumps


@dataclass(frozen=True)
class SmoothedHypercube:
    """Boundary of (cube of half-width w/2) + (ball of radius w/2); reach w/2."""

    dim: int
    width: float  # the paper-style half-width parameter; cube is [-w/2, w/2]^d

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")


@dataclass(frozen=True)
class Bump:
    center: tuple          # on the base surface, in a flat facet
    axis: tuple            # outward unit facet normal (signed coordinate axis)
    height: float          # apex displacement along axis, > 0
    radius: float          # support radius rho
    scale: float = 1.0     # deflation factor applied to height

    def __post_init__(self):
        if self.height <= 0 or self.radius <= 0:
            raise ValueError("bump height and radius must be positive")
        if not 0 < self.scale <= 1 + 1e-12:
            raise ValueError("deflation scale must lie in (0, 1]")

    @property
    def axis_index(self) -> int:
        a = np.asarray(self.axis)
        return int(np.argmax(np.abs(a)))

    @property
    def axis_sign(self) -> float:
        a = np.asarray(self.axis)
        return float(np.sign(a[self.axis_index]))

    @property
    def effective_height(self) -> float:
        return self.height * self.scale

    def curvature_radius(self) -> float:
        """Smallest radius of curvature of the displaced patch (two-arc profile)."""
        return self.radius ** 2 / (4.0 * self.effective_height)


def support_radius(height: float, width: float, factor: float = SUPPORT_FACTOR) -> float:
    return factor * math.sqrt(abs(height) * width)


@dataclass(frozen=True)
class BumpedHypercube(ImplicitSurface):
    base: SmoothedHypercube
    bumps: tuple = ()
    tol: Tolerances = field(default=DEFAULT, compare=False)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.base.dim

    @property
    def width(self) -> float:
        return self.base.width

    # -- base field -------------------------------------------------------

    def _base_field(self, pts: np.ndarray) -> np.ndarray:
        half = self.width / 2.0
        q = np.abs(pts) - half
        out = np.maximum(q, 0.0)
        n = np.linalg.norm(out, axis=1)
        f = n - half
        f[n == 0.0] = -half
        return f

    def _base_gradient(self, pts: np.ndarray) -> np.ndarray:
        half = self.width / 2.0
        q = np.abs(pts) - half
        out = np.maximum(q, 0.0)
        n = np.linalg.norm(out, axis=1, keepdims=True)
        n[n == 0] = 1.0
        return out * np.sign(pts) / n

    def base_project(self, x) -> np.ndarray:
        """Closed-form nearest-point projection onto the unbumped base."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        half = self.width / 2.0
        clamped = np.clip(pts, -half, half)
        rel = pts - clamped
        n = np.linalg.norm(rel, axis=1, keepdims=True)
        if np.any(n == 0):
            raise ProjectionError("point inside the solid cube projects ambiguously")
        y = clamped + rel / n * half
        return y if np.asarray(x).ndim > 1 else y[0]

    # -- bumps ------------------------------------------------------------

    def _displacement(self, pts: np.ndarray) -> np.ndarray:
        total = np.zeros(len(pts))
        half = self.width / 2.0
        for b in self.bumps:
            c = np.asarray(b.center)
            i = b.axis_index
            s = b.axis_sign
            rel = pts - c
            tau = s * pts[:, i] - (half + half)  # distance above the facet plane
            perp = rel.copy()
            perp[:, i] = 0.0
            r = np.linalg.norm(perp, axis=1)
            act = r < b.radius
            if not np.any(act):
                continue
            w = _window(tau[act], self.width / 8.0, self.width / 4.0)
            total[act] += b.effective_height * _profile(r[act] / b.radius) * w
        return total

    def field(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return self._base_field(pts) - self._displacement(pts)

    def gradient(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        g = self._base_gradient(pts)
        half = self.width / 2.0
        for b in self.bumps:
            c = np.asarray(b.center)
            i = b.axis_index
            s = b.axis_sign
            rel = pts - c
            tau = s * pts[:, i] - (half + half)
            perp = rel.copy()
            perp[:, i] = 0.0
            r = np.linalg.norm(perp, axis=1)
            act = r < b.radius
            if not np.any(act):
                continue
            w = _window(tau[act], self.width / 8.0, self.width / 4.0)
            dw = _window_deriv(tau[act], self.width / 8.0, self.width / 4.0)
            p = _profile(r[act] / b.radius)
            dp = _profile_deriv(r[act] / b.radius) / b.radius
            r_safe = np.where(r[act] == 0, 1.0, r[act])
            radial = perp[act] / r_safe[:, None]
            h = b.effective_height
            g[act] -= h * dp[:, None] * w[:, None] * radial
            g[act, i] -= h * p * dw * s
        return g

    def field_lipschitz(self) -> float:
        lip = 1.0
        for b in self.bumps:
            lip += b.effective_height * (2.0 / b.radius + 12.0 / self.width)
        return lip

    def reach_lower_bound(self) -> float:
        r = self.width / 2.0
        for b in self.bumps:
            r = min(r, b.curvature_radius())
        return r

    def bounding_radius(self) -> float:
        return self.width * math.sqrt(self.dim) * 1.01

    # -- construction -----------------------------------------------------

    def facet_of(self, point) -> tuple[int, float]:
        """(axis index, sign) of the flat facet a point lies on, or raise."""
        p = np.asarray(point, dtype=float)
        half = self.width / 2.0
        hits = [
            (i, float(np.sign(p[i])))
            for i in range(self.dim)
            if abs(abs(p[i]) - self.width) <= 1e-9
        ]
        if len(hits) != 1:
            raise BumpPlacementError(f"{p} is not on a unique flat facet")
        i, s = hits[0]
        others = np.delete(p, i)
        if np.any(np.abs(others) > half + 1e-12):
            raise BumpPlacementError(f"{p} lies outside the flat facet region")
        return i, s

    def add_bump(
        self,
        center_on_base,
        apex_displacement: float,
        radius: float | None = None,
        forbidden_points=None,
        clearance_bumps: bool = True,
        min_clearance: float = 0.0,
    ) -> "BumpedHypercube":
        """Return a new surface with an outward bump through
        center + apex_displacement * axis.  Zero displacement is the identity.
        """
        if apex_displacement == 0:
            return self
        if apex_displacement < 0:
            raise BumpPlacementError("bumps displace outward")
        c = np.asarray(center_on_base, dtype=float)
        i, s = self.facet_of(c)
        axis = np.zeros(self.dim)
        axis[i] = s
        rho = support_radius(apex_displacement, self.width) if radius is None else float(radius)
        half = self.width / 2.0
        others = np.delete(c, i)
        if np.any(np.abs(others) + rho > half + 1e-12):
            raise BumpPlacementError("bump support leaves the flat facet region")
        bump = Bump(tuple(c), tuple(axis), float(apex_displacement), rho)
        if clearance_bumps:
            for other in self.bumps:
                gap = _infacet_distance(c, np.asarray(other.center), i)
                if other.axis_index == i and gap < rho + other.radius + min_clearance:
                    raise BumpPlacementError(
                        f"bump support overlaps existing bump (gap {gap:.4f} < "
                        f"{rho + other.radius + min_clearance:.4f})"
                    )
        if forbidden_points is not None and len(forbidden_points):
            pts = np.atleast_2d(np.asarray(forbidden_points, dtype=float))
            perp = pts - c
            perp[:, i] = 0.0
            rr = np.linalg.norm(perp, axis=1)
            near = (rr < rho) & (np.abs(s * pts[:, i] - self.width) < self.width / 4.0)
            if np.any(near):
                raise BumpPlacementError(
                    f"{int(np.sum(near))} protected point(s) inside bump support"
                )
        return replace(self, bumps=self.bumps + (bump,))

    def add_ridge_bump(self, targets, forbidden_points=None) -> "BumpedHypercube":
        """Deform so the surface passes through both target points.

        Realized as the sum of two overlapping round bumps whose amplitudes
        solve a 2x2 linear system.  Raises RidgeInfeasibleError when no
        curvature-respecting pair of amplitudes can interpolate the targets
        (for instance when the targets are nearly vertically stacked).
        """
        t = np.atleast_2d(np.asarray(targets, dtype=float))
        if t.shape[0] != 2:
            raise ValueError("a ridge interpolates exactly two targets")
        if np.allclose(t[0], t[1]):
            base = t[0].copy()
            i, s = _facet_guess(self, base)
            h = s * base[i] - self.width
            base[i] = s * self.width
            return self.add_bump(base, h, forbidden_points=forbidden_points)
        i, s = _facet_guess(self, t[0])
        heights = s * t[:, i] - self.width
        if np.any(heights <= 0):
            raise RidgeInfeasibleError("targets must sit strictly above the facet")
        bases = t.copy()
        bases[:, i] = s * self.width
        sep = _infacet_distance(bases[0], bases[1], i)
        rhos = np.array([support_radius(h, self.width) for h in heights])
        # amplitudes for the summed profile
        p12 = float(_profile(np.array([sep / rhos[1]]))[0])
        p21 = float(_profile(np.array([sep / rhos[0]]))[0])
        det = 1.0 - p12 * p21
        needed_slope = abs(heights[1] - heights[0]) / max(sep, 1e-300)
        curvature_slope_cap = 2.0 * max(heights) / min(rhos)  # max |dD/dr| of one bump
        if det <= 1e-12:
            raise RidgeInfeasibleError(
                f"targets too close for independent amplitudes (sep={sep:.3e})"
            )
        a1 = (heights[0] - p12 * heights[1]) / det
        a2 = (heights[1] - p21 * heights[0]) / det
        if a1 <= 0 or a2 <= 0 or needed_slope > curvature_slope_cap:
            raise RidgeInfeasibleError(
                "no curvature-respecting ridge through targets: required slope "
                f"{needed_slope:.3g} exceeds cap {curvature_slope_cap:.3g} "
                f"(heights {heights[0]:.3e}/{heights[1]:.3e}, separation {sep:.3e})"
            )
        out = self
        for base, amp, rho in zip(bases, (a1, a2), rhos):
            out = out.add_bump(
                base, amp, radius=rho, forbidden_points=forbidden_points,
                clearance_bumps=False,
            )
        # one fixed-point correction: verify interpolation, nudge amplitudes
        resid = out.field(t)
        if np.max(np.abs(resid)) > 1e-10 * max(1.0, self.width):
            bumps = list(out.bumps)
            for j in range(2):
                b = bumps[-2 + j]
                bumps[-2 + j] = replace(b, height=b.height + float(resid[j]))
            out = replace(out, bumps=tuple(bumps))
            resid = out.field(t)
            if np.max(np.abs(resid)) > 1e-10 * max(1.0, self.width):
                raise RidgeInfeasibleError(
                    f"ridge correction failed, residual {np.max(np.abs(resid)):.3e}"
                )
        return out

    def set_deflation(self, bump_index: int, factor: float) -> "BumpedHypercube":
        """Scale one bump's apex by factor in (0, 1]; factor 1 is the identity."""
        if not 0 < factor <= 1:
            raise ValueError("deflation factor must lie in (0, 1]")
        bumps = list(self.bumps)
        b = bumps[bump_index]
        bumps[bump_index] = replace(b, scale=b.scale * factor)
        return replace(self, bumps=tuple(bumps))

    def with_bump_height(self, bump_index: int, height: float) -> "BumpedHypercube":
        bumps = list(self.bumps)
        bumps[bump_index] = replace(bumps[bump_index], height=float(height), scale=1.0)
        return replace(self, bumps=tuple(bumps))

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "type": "bumped_hypercube",
            "dim": self.base.dim,
            "width": self.base.width,
            "bumps": [
                {
                    "center": list(map(float, b.center)),
                    "axis": list(map(float, b.axis)),
                    "height": b.height,
                    "radius": b.radius,
                    "scale": b.scale,
                }
                for b in self.bumps
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BumpedHypercube":
        base = SmoothedHypercube(dim=int(data["dim"]), width=float(data["width"]))
        bumps = tuple(
            Bump(
                tuple(b["center"]),
                tuple(b["axis"]),
                float(b["height"]),
                float(b["radius"]),
                float(b["scale"]),
            )
            for b in data.get("bumps", ())
        )
        return cls(base=base, bumps=bumps)


def _infacet_distance(a: np.ndarray, b: np.ndarray, axis_index: int) -> float:
    rel = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    rel[axis_index] = 0.0
    return float(np.linalg.norm(rel))


def _facet_guess(m: BumpedHypercube, point_above: np.ndarray) -> tuple[int, float]:
    """Facet (axis, sign) nearest to a point hovering above one flat facet."""
    p = np.asarray(point_above, dtype=float)
    i = int(np.argmax(np.abs(p)))
    if abs(p[i]) < m.width / 2.0:
        raise BumpPlacementError(f"{p} does not single out a facet")
    return i, float(np.sign(p[i]))


def smoothed_hypercube(dim: int, width: float) -> BumpedHypercube:
    return BumpedHypercube(base=SmoothedHypercube(dim=dim, width=width))


# ---------------------------------------------------------------------------
# reach estimation


@dataclass(frozen=True)
class ReachEstimate:
    lower_bound: float
    analytic: float
    probe_value: float
    probe_count: int
    method: str


def estimate_reach(surface: ImplicitSurface, probes, probe_count: int = 2000) -> ReachEstimate:
    """Numeric reach estimate from (a) analytic curvature bounds and (b)
    point/normal probes: reach <= |y-x|^2 / (2 dist(y-x, T_x)).
    """
    pts = np.atleast_2d(np.asarray(probes, dtype=float))
    if len(pts) > probe_count:
        idx = np.linspace(0, len(pts) - 1, probe_count).astype(int)
        pts = pts[idx]
    if len(pts) < 2:
        raise ValueError("need at least two probe points")
    normals = surface.gradient(pts)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    best = np.inf
    chunk = 512
    for i in range(0, len(pts), chunk):
        block = pts[i : i + chunk]
        rel = pts[None, :, :] - block[:, None, :]  # (B, N, d)
        d2 = np.einsum("bnd,bnd->bn", rel, rel)
        normal_part = np.abs(np.einsum("bnd,bd->bn", rel, normals[i : i + chunk]))
        with np.errstate(divide="ignore", invalid="ignore"):
            est = d2 / (2.0 * normal_part)
        est[normal_part < 1e-14] = np.inf
        np.fill_diagonal(est[:, i : i + len(block)], np.inf)
        best = min(best, float(np.min(est)))
    analytic = surface.reach_lower_bound()
    return ReachEstimate(
        lower_bound=min(analytic, best),
        analytic=analytic,
        probe_value=best,
        probe_count=len(pts),
        method="analytic-curvature+pair-probes",
    )
