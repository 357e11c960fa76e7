"""Reflecting Brownian paths sampled by walk-on-spheres with pull-back.

The sampler advances a batch of paths in lockstep for `n_steps` steps.  Step
rules, with d the distance from the current position to the boundary and
eps = k_eps * dx the boundary-layer width:

* d > eps (interior): jump radius r = d, the maximal inscribed sphere.
* dx < d <= eps: r = dx.
* d <= dx (including a position on the boundary): r = 2 * dx, so the
  proposal can leave the domain.
* A proposal outside the closed domain is pulled back to the nearest
  boundary point and a hit is recorded there; a proposal landing within the
  on-boundary tolerance also counts as a hit at its boundary foot.  Both
  happen only from inside the eps layer.  An interior-radius jump can stray
  outside only by float rounding at tangency; it is clamped to the boundary
  without a hit so that hits always originate in the eps layer.

Every step counts toward n_steps, and paths are never absorbed: after a
hit the walk continues from the recorded boundary point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Domain, RegionClass
from .sampling import unit_sphere_sample

# Directions are drawn in fixed blocks of this many steps so that stream
# consumption per step is independent of n_steps (a shorter run replays a
# bitwise prefix of a longer one on the same stream).
_BLOCK = 64

_REGION_BY_CODE = (
    RegionClass.INTERIOR,
    RegionClass.EPS_FAR,
    RegionClass.EPS_NEAR,
    RegionClass.ON_BOUNDARY,
    RegionClass.OUTSIDE,
)
_CODE_BY_REGION = {r: i for i, r in enumerate(_REGION_BY_CODE)}


@dataclass
class StepBatch:
    """One lockstep move of a path batch.

    Flags describe the pre-move position (the region the step started
    from); `x` and `d` describe the post-move state.  Arrays are freshly
    allocated each step, so consumers may keep references.
    """

    step: int               # 1-based step index
    x: np.ndarray           # (n, 3) positions after the move
    d: np.ndarray           # (n,) distance to the boundary after the move
    d_pre: np.ndarray       # (n,) distance before the move
    r: np.ndarray           # (n,) jump radius used
    in_eps: np.ndarray      # (n,) bool: started inside the eps layer
    near: np.ndarray        # (n,) bool: started with d <= dx (2*dx radius)
    hit_idx: np.ndarray     # (k,) indices of paths that hit the boundary
    hit_points: np.ndarray  # (k, 3) boundary feet for those paths


def _validate_walk_args(domain, x0, dx, k_eps, n_steps):
    dx = float(dx)
    if not dx > 0.0:
        raise ValueError("dx must be positive")
    k = int(k_eps)
    if k != k_eps or k < 2:
        raise ValueError("k_eps must be an integer >= 2")
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    x0 = np.asarray(x0, dtype=np.float64).reshape(3)
    if not domain.contains(x0):
        raise ValueError("start point lies outside the domain")
    if domain.distance_to_boundary(x0) <= domain.boundary_tolerance:
        raise ValueError("start point lies on the domain boundary")
    return x0, dx, k, n_steps


def walk_steps(domain: Domain, x0, dx: float, k_eps: int, n_steps: int,
               rng: np.random.Generator, n_paths: int = 1):
    """Yield a StepBatch per step for n_paths lockstep walks from x0."""
    x0, dx, k, n_steps = _validate_walk_args(domain, x0, dx, k_eps, n_steps)
    eps = k * dx
    two_dx = 2.0 * dx
    btol = domain.boundary_tolerance

    x = np.repeat(x0[None, :], n_paths, axis=0)
    d = np.full(n_paths, domain.distance_to_boundary(x0))
    step = 0
    while step < n_steps:
        block = min(_BLOCK, n_steps - step)
        dirs = unit_sphere_sample(rng, (block, n_paths))
        for j in range(block):
            step += 1
            in_eps = d <= eps
            near = d <= dx
            r = np.where(in_eps, np.where(near, two_dx, dx), d)
            prop = x + r[:, None] * dirs[j]
            inside = domain.contains(prop)
            d_prop = domain.distance_to_boundary(prop)
            hit = in_eps & (~inside | (d_prop <= btol))
            snap = hit | ~inside
            if snap.any():
                idx = np.nonzero(snap)[0]
                prop[idx] = domain.nearest_boundary_point(prop[idx])
                d_prop[idx] = 0.0
            hit_idx = np.nonzero(hit)[0]
            d_pre = d
            x = prop
            d = d_prop
            yield StepBatch(step, x, d, d_pre, r, in_eps, near,
                            hit_idx, prop[hit_idx])


@dataclass
class PathEvent:
    """State of one path after one step."""

    step: int                    # 1-based
    position: np.ndarray         # (3,) position after the move
    region: RegionClass          # classification of the pre-move position
    in_eps: bool                 # pre-move position inside the eps layer
    radius: float                # jump radius used
    hit: np.ndarray | None       # boundary point if the step hit, else None


@dataclass
class RbmPath:
    """A recorded reflecting walk: n_steps events plus the run parameters."""

    x0: np.ndarray
    dx: float
    k_eps: int
    n_steps: int
    positions: np.ndarray    # (n_steps, 3)
    radii: np.ndarray        # (n_steps,)
    distances: np.ndarray    # (n_steps,) distance to the boundary, pre-move
    regions: np.ndarray      # (n_steps,) int8 region codes, pre-move
    in_eps: np.ndarray       # (n_steps,) bool
    hit_mask: np.ndarray     # (n_steps,) bool
    hit_points: np.ndarray   # (n_steps, 3), NaN rows where no hit

    @property
    def eps(self) -> float:
        return self.k_eps * self.dx

    def region(self, i: int) -> RegionClass:
        return _REGION_BY_CODE[self.regions[i]]

    def events(self):
        """Iterate PathEvents in step order."""
        for i in range(self.n_steps):
            yield PathEvent(
                step=i + 1,
                position=self.positions[i],
                region=_REGION_BY_CODE[self.regions[i]],
                in_eps=bool(self.in_eps[i]),
                radius=float(self.radii[i]),
                hit=self.hit_points[i] if self.hit_mask[i] else None,
            )


def region_codes(d_pre: np.ndarray, dx: float, eps: float, btol: float) -> np.ndarray:
    """Vector region codes from pre-move boundary distances."""
    codes = np.full(d_pre.shape, _CODE_BY_REGION[RegionClass.EPS_FAR], dtype=np.int8)
    codes[d_pre > eps] = _CODE_BY_REGION[RegionClass.INTERIOR]
    codes[d_pre <= dx] = _CODE_BY_REGION[RegionClass.EPS_NEAR]
    codes[d_pre <= btol] = _CODE_BY_REGION[RegionClass.ON_BOUNDARY]
    return codes


def simulate_path(domain: Domain, x0, dx: float, k_eps: int, n_steps: int,
                  rng: np.random.Generator) -> RbmPath:
    """Record a single reflecting walk of n_steps steps."""
    x0v, dxv, k, n = _validate_walk_args(domain, x0, dx, k_eps, n_steps)
    eps = k * dxv
    btol = domain.boundary_tolerance
    positions = np.empty((n, 3))
    radii = np.empty(n)
    distances = np.empty(n)
    regions = np.empty(n, dtype=np.int8)
    in_eps = np.empty(n, dtype=bool)
    hit_mask = np.zeros(n, dtype=bool)
    hit_points = np.full((n, 3), np.nan)
    for sb in walk_steps(domain, x0v, dxv, k, n, rng, n_paths=1):
        i = sb.step - 1
        positions[i] = sb.x[0]
        radii[i] = sb.r[0]
        distances[i] = sb.d_pre[0]
        regions[i] = region_codes(sb.d_pre, dxv, eps, btol)[0]
        in_eps[i] = sb.in_eps[0]
        if sb.hit_idx.size:
            hit_mask[i] = True
            hit_points[i] = sb.hit_points[0]
    return RbmPath(x0=x0v, dx=dxv, k_eps=k, n_steps=n, positions=positions,
                   radii=radii, distances=distances, regions=regions,
                   in_eps=in_eps, hit_mask=hit_mask, hit_points=hit_points)
