"""Bounded 3-D domains: boxes, balls, and ellipsoids.

Provides the distance / projection / normal queries and the region
classification that the reflecting-walk samplers are built on.  Every
operation accepts a single point of shape (3,) or a batch of shape (n, 3)
and returns output with the matching leading shape.

Conventions shared by all domains:

* contains() tests the closed domain with relative slack 1e-12 so that
  boundary feet produced by nearest_boundary_point(), which land within a
  few ulp of the surface, always test as contained.
* The on-boundary tolerance is 1e-9 times the domain diameter.
* Ambiguous projections (ball center, box diagonal, ellipsoid axis planes)
  resolve by a deterministic tie-break, never an error: first (smallest)
  axis index wins, and signs default to the positive side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Relative slack for closed containment tests.
CONTAINS_SLACK = 1e-12

# On-boundary tolerance as a fraction of the domain diameter.
BOUNDARY_TOL_REL = 1e-9

# Residual tolerance for the ellipsoid projection solve.
_LAGRANGE_TOL = 1e-12


class RegionClass(str, Enum):
    """Position of a point relative to the boundary layer of width eps."""

    INTERIOR = "interior"        # d(x, boundary) > eps
    EPS_FAR = "eps_far"          # dx < d <= eps
    EPS_NEAR = "eps_near"        # tol < d <= dx
    ON_BOUNDARY = "on_boundary"  # d <= tol
    OUTSIDE = "outside"          # x outside the closed domain


def _as_batch(x) -> tuple[np.ndarray, bool]:
    """Normalize x to shape (n, 3); second value tells if input was (3,)."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape == (3,):
        return a[None, :], True
    if a.ndim == 2 and a.shape[1] == 3:
        return a, False
    raise ValueError(f"expected a point (3,) or batch (n, 3), got shape {a.shape}")


class Domain:
    """Base class; subclasses implement the centered _ops on (n, 3) batches."""

    center: np.ndarray

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    @property
    def boundary_tolerance(self) -> float:
        return BOUNDARY_TOL_REL * self.diameter

    # -- centered implementations -------------------------------------------
    def _contains(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _distance(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _project(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _normal(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public API ----------------------------------------------------------
    def contains(self, x):
        """True iff x lies in the closed domain (with 1e-12 relative slack)."""
        y, single = _as_batch(x)
        out = self._contains(y - self.center)
        return bool(out[0]) if single else out

    def distance_to_boundary(self, x):
        """Unsigned distance from x to the boundary surface (inside or out)."""
        y, single = _as_batch(x)
        out = self._distance(y - self.center)
        return float(out[0]) if single else out

    def nearest_boundary_point(self, x):
        """Closest boundary point to x; idempotent for points already there."""
        y, single = _as_batch(x)
        out = self._project(y - self.center) + self.center
        return out[0] if single else out

    def outward_normal(self, x):
        """Unit outward normal at a boundary point x."""
        y, single = _as_batch(x)
        out = self._normal(y - self.center)
        return out[0] if single else out

    def surface_sample(self, n: int, rng: np.random.Generator):
        """n boundary points plus area-element weights for surface quadrature.

        The weights are proportional to the local surface measure of the
        sampling scheme, so a weighted mean of f approximates the surface
        average of f.  Box and ball sampling is already area-uniform
        (weights identically 1).
        """
        raise NotImplementedError


@dataclass
class Box(Domain):
    """Axis-aligned box given by half-widths about a center."""

    half_widths: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.half_widths = np.asarray(self.half_widths, dtype=np.float64).reshape(3)
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not np.all(self.half_widths > 0):
            raise ValueError("box half-widths must be positive")

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.linalg.norm(self.half_widths))

    def _contains(self, y):
        slack = self.half_widths * (1.0 + CONTAINS_SLACK)
        return (np.abs(y) <= slack).all(axis=1)

    def _distance(self, y):
        e = np.abs(y) - self.half_widths
        emax = e.max(axis=1)
        outside = np.sqrt((np.maximum(e, 0.0) ** 2).sum(axis=1))
        return np.where(emax <= 0.0, -emax, outside)

    def _project(self, y):
        e = np.abs(y) - self.half_widths
        p = np.clip(y, -self.half_widths, self.half_widths)
        rows = np.nonzero(e.max(axis=1) <= 0.0)[0]
        if rows.size:
            # interior points snap to the closest face; argmax is the first
            # (smallest-index) axis on ties, signs default positive
            f = e[rows].argmax(axis=1)
            s = np.where(y[rows, f] >= 0.0, 1.0, -1.0)
            p[rows, f] = s * self.half_widths[f]
        return p

    def _normal(self, y):
        ratio = np.abs(y) / self.half_widths
        f = ratio.argmax(axis=1)
        n = np.zeros_like(y)
        rows = np.arange(y.shape[0])
        n[rows, f] = np.where(y[rows, f] >= 0.0, 1.0, -1.0)
        return n

    def surface_sample(self, n, rng):
        h = self.half_widths
        areas = np.array([h[1] * h[2], h[0] * h[2], h[0] * h[1]])
        face_p = np.repeat(areas, 2)
        face_p = face_p / face_p.sum()
        faces = rng.choice(6, size=n, p=face_p)
        pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
        axis = faces // 2
        sign = np.where(faces % 2 == 0, 1.0, -1.0)
        pts[np.arange(n), axis] = sign * h[axis]
        return pts + self.center, np.ones(n)


@dataclass
class Ball(Domain):
    """Ball of given radius about a center."""

    radius: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.radius = float(self.radius)
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def _contains(self, y):
        lim = (self.radius * (1.0 + CONTAINS_SLACK)) ** 2
        return (y * y).sum(axis=1) <= lim

    def _distance(self, y):
        return np.abs(self.radius - np.sqrt((y * y).sum(axis=1)))

    def _project(self, y):
        r = np.sqrt((y * y).sum(axis=1))
        p = np.empty_like(y)
        safe = r > 0.0
        np.divide(y, r[:, None], out=p, where=safe[:, None])
        p *= self.radius
        # the center projects to the +x pole by convention
        p[~safe] = np.array([self.radius, 0.0, 0.0])
        return p

    def _normal(self, y):
        r = np.sqrt((y * y).sum(axis=1))
        n = np.empty_like(y)
        safe = r > 0.0
        np.divide(y, r[:, None], out=n, where=safe[:, None])
        n[~safe] = np.array([1.0, 0.0, 0.0])
        return n

    def surface_sample(self, n, rng):
        v = rng.standard_normal((n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return self.center + self.radius * v, np.ones(n)


def _lagrange_root(y: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """Largest root t of sum_i a_i^2 y_i^2 / (a_i^2 + t)^2 = 1, rows of y.

    Works in any dimension k >= 1 (rows (m, k), axes (k,)); every component
    of y must be nonzero so the function is smooth on (max start, inf).
    Newton from the left of the root with a maintained bisection bracket;
    the iterate increases monotonically, so all a_i^2 + t stay positive.
    """
    axes2 = axes * axes
    ay = axes[None, :] * np.abs(y)
    lo = (ay - axes2[None, :]).max(axis=1)
    hi = np.linalg.norm(y, axis=1) * axes.max() - axes2.min()
    hi = np.maximum(hi, lo)
    # start from one Newton step of F at t=0, clipped into the bracket;
    # near-surface rows (the bulk of walk queries) then converge in a
    # couple of iterations, and the bracket keeps any start safe
    y2 = y * y
    f0 = (y2 / axes2[None, :]).sum(axis=1) - 1.0
    fp0 = -2.0 * (y2 / (axes2 * axes2)[None, :]).sum(axis=1)
    t = np.clip(-f0 / fp0, lo, hi)
    # iterate on the shrinking set of unconverged rows; near-surface rows
    # finish in a handful of steps while deep-interior rows need many more
    out = t.copy()
    active = np.arange(t.shape[0])
    for _ in range(100):
        q = axes2[None, :] + t[:, None]
        g = (ay / q) ** 2
        f = g.sum(axis=1) - 1.0
        done = np.abs(f) <= _LAGRANGE_TOL
        if done.any():
            out[active[done]] = t[done]
            keep = ~done
            if not keep.any():
                return out
            active, t, lo, hi = active[keep], t[keep], lo[keep], hi[keep]
            ay, q, g, f = ay[keep], q[keep], g[keep], f[keep]
        lo = np.where(f > 0.0, t, lo)
        hi = np.where(f < 0.0, t, hi)
        fp = -2.0 * (g / q).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / fp
        bad = ~np.isfinite(tn) | (tn < lo) | (tn > hi)
        t = np.where(bad, 0.5 * (lo + hi), tn)
    out[active] = t
    return out


@dataclass
class Ellipsoid(Domain):
    """Ellipsoid with semi-axes (a, b, c) about a center."""

    semi_axes: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.semi_axes = np.asarray(self.semi_axes, dtype=np.float64).reshape(3)
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not np.all(self.semi_axes > 0):
            raise ValueError("ellipsoid semi-axes must be positive")

    @property
    def diameter(self) -> float:
        return 2.0 * float(self.semi_axes.max())

    def _level(self, y):
        return ((y / self.semi_axes) ** 2).sum(axis=1)

    def _contains(self, y):
        return self._level(y) <= 1.0 + CONTAINS_SLACK

    def _feet(self, y):
        """Nearest boundary points for centered rows y."""
        a = self.semi_axes
        a2 = a * a
        p = np.empty_like(y)
        nz = (y != 0.0).all(axis=1)
        if nz.any():
            t = _lagrange_root(y[nz], a)
            p[nz] = y[nz] * a2[None, :] / (a2[None, :] + t[:, None])
        if not nz.all():
            for i in np.nonzero(~nz)[0]:
                p[i] = self._foot_degenerate(y[i])
        return p

    def _foot_degenerate(self, y: np.ndarray) -> np.ndarray:
        """Nearest boundary point when some components of y are exactly zero.

        The in-plane Lagrange root misses feet that leave the zero-component
        plane, so enumerate every critical-point family: the root of the
        reduced (nonzero-axis) problem, plus for each zero axis j the
        solution pinned at t = -a_j^2 when it is feasible.  Ties resolve to
        the earliest candidate: reduced root first, then zero axes in index
        order, with feet taking the positive side of symmetric axes.
        """
        a = self.semi_axes
        a2 = a * a
        nz = np.nonzero(y != 0.0)[0]
        if nz.size == 0:
            # the exact center: nearest point sits on the shortest semi-axis
            j = int(np.argmin(a))
            p = np.zeros(3)
            p[j] = a[j]
            return p
        best_p = None
        best_d = np.inf
        t = _lagrange_root(y[None, nz], a[nz])[0]
        p = np.zeros(3)
        p[nz] = y[nz] * a2[nz] / (a2[nz] + t)
        best_p, best_d = p, float(np.linalg.norm(y - p))
        for j in range(3):
            if y[j] != 0.0:
                continue
            den = a2[nz] - a2[j]
            if np.any(den == 0.0):
                continue
            pn = y[nz] * a2[nz] / den
            e = ((pn / a[nz]) ** 2).sum()
            if e >= 1.0:
                continue
            p = np.zeros(3)
            p[nz] = pn
            p[j] = a[j] * math.sqrt(1.0 - e)
            d = float(np.linalg.norm(y - p))
            if d < best_d:
                best_p, best_d = p, d
        return best_p

    def _distance(self, y):
        return np.linalg.norm(y - self._feet(y), axis=1)

    def _project(self, y):
        return self._feet(y)

    def _normal(self, y):
        m = y / (self.semi_axes**2)
        norm = np.linalg.norm(m, axis=1, keepdims=True)
        safe = norm[:, 0] > 0.0
        n = np.empty_like(y)
        np.divide(m, norm, out=n, where=safe[:, None])
        n[~safe] = np.array([1.0, 0.0, 0.0])
        return n

    def surface_sample(self, n, rng):
        a, b, c = self.semi_axes
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        u = rng.uniform(-1.0, 1.0, n)
        s = np.sqrt(1.0 - u * u)
        pts = np.stack([a * s * np.cos(theta), b * s * np.sin(theta), c * u], axis=1)
        # area element of the (theta, u) chart
        w = np.sqrt(
            (b * c * s * np.cos(theta)) ** 2
            + (a * c * s * np.sin(theta)) ** 2
            + (a * b * u) ** 2
        )
        return pts + self.center, w


def classify(domain: Domain, x, dx: float, eps: float) -> RegionClass:
    """Region of a single point for boundary-layer width eps and step dx."""
    if not dx > 0.0:
        raise ValueError("dx must be positive")
    if eps < dx:
        raise ValueError("eps must be at least dx")
    if not domain.contains(x):
        return RegionClass.OUTSIDE
    d = domain.distance_to_boundary(x)
    if d <= domain.boundary_tolerance:
        return RegionClass.ON_BOUNDARY
    if d <= dx:
        return RegionClass.EPS_NEAR
    if d <= eps:
        return RegionClass.EPS_FAR
    return RegionClass.INTERIOR


def make_domain(kind: str, *, half_widths=None, radius=None, semi_axes=None,
                center=(0.0, 0.0, 0.0)) -> Domain:
    """Build a domain from plain config values."""
    kind = kind.lower()
    if kind in ("box", "cube"):
        if half_widths is None:
            raise ValueError("box domain needs half_widths")
        return Box(np.asarray(half_widths, dtype=np.float64), np.asarray(center))
    if kind in ("ball", "sphere"):
        if radius is None:
            raise ValueError("ball domain needs radius")
        return Ball(float(radius), np.asarray(center))
    if kind == "ellipsoid":
        if semi_axes is None:
            raise ValueError("ellipsoid domain needs semi_axes")
        return Ellipsoid(np.asarray(semi_axes, dtype=np.float64), np.asarray(center))
    raise ValueError(f"unknown domain kind {kind!r}")
