"""Boundary local time estimators for recorded or streaming walks.

Two estimators:

* Occupation: the layer occupation time is accumulated per step as the
  expected time the step's sphere excursion spends inside the boundary
  layer {dist <= eps}, and the local time is that occupation time divided
  by eps.  For a sphere of radius r centered at distance d from a locally
  flat boundary, the expected sojourn time below a plane at signed center
  distance c (c > 0 when the plane sits between center and boundary) is

      (r - c)^3 / (6 r)   for |c| <= r,

  obtained by integrating twice the Green's function of the ball over the
  half-space; the layer sojourn is the difference of the wall plane (c = d)
  and the layer plane (c = d - eps) values.  A fixed dx step whose sphere
  lies entirely inside the layer therefore contributes its full expected
  duration dx^2 / 3, while an interior jump of radius d contributes
  eps^3 / (6 d), which vanishes away from the boundary.  Counting layer
  steps at dx^2 / 3 apiece and ignoring the interior overlap instead
  (the naive census) systematically underestimates the occupation time,
  because near-boundary jumps swallow layer time at sub-step resolution;
  the sojourn weighting removes that bias without touching the walk.
* Levy: the step range is split into `blocks` equal blocks; each block
  containing at least one boundary hit contributes sqrt(pi/2) times the
  square root of the block's elapsed time, block time being
  (n_steps / blocks) * dx^2 / 3.  At most one increment per block.

The elapsed-time diagnostic T_eps counts eps-layer steps at dx^2 / 3 and
interior jumps of radius r at r^2 / 3 (the mean exit time from a radius-r
ball in three dimensions).

LocalTimeAccumulator reproduces the end values of the recorded-path
functions: occupation and Levy totals bitwise (the arithmetic is kept in
the same shape on both routes), T_eps to summation-order rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rbm import RbmPath, StepBatch

LEVY_FACTOR = math.sqrt(math.pi / 2.0)


def _halfspace_sojourn(r, c):
    """Expected time below a plane at signed center distance c before the
    excursion exits a sphere of radius r; c > 0 puts the plane below the
    center, and |c| >= r means the plane misses the sphere."""
    c = np.clip(c, -r, r)
    below = (r - c) ** 3 / (6.0 * r)
    return np.where(c >= 0.0, below, r * r / 3.0 - (r + c) ** 3 / (6.0 * r))


def layer_sojourn_time(r, d, eps: float):
    """Expected time one step's sphere excursion spends in the boundary layer.

    r is the jump radius, d the pre-move distance to the boundary, and the
    layer is {0 <= dist <= eps}; the boundary is treated as locally flat.
    The part of the sphere beyond the wall is excluded, so a step taken
    from the boundary itself counts half of its expected duration.
    """
    r = np.asarray(r, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    return _halfspace_sojourn(r, d - eps) - _halfspace_sojourn(r, d)


def layer_step_weight(r, d, eps: float, dx: float):
    """Layer sojourn expressed in units of the fixed-step duration dx^2 / 3.

    Equals 1.0 (up to float rounding) for a dx step whose sphere lies fully
    inside the layer and inside the domain, so for well-separated layer
    steps the weighted census degenerates to the plain step count.
    """
    return layer_sojourn_time(r, d, eps) * (3.0 / (dx * dx))


@dataclass
class LocalTimePath:
    """Cumulative local time sampled at increasing step indices."""

    steps: np.ndarray    # (m,) step indices where the value is recorded
    values: np.ndarray   # (m,) cumulative local time
    kind: str            # "occupation" or "levy"
    dx: float
    eps: float | None = None
    blocks: int | None = None

    @property
    def end(self) -> float:
        return float(self.values[-1])

    def write_csv(self, fileobj) -> None:
        """Dump as two columns: step, L."""
        fileobj.write("step,local_time\n")
        for s, v in zip(self.steps, self.values):
            fileobj.write(f"{int(s)},{float(v)!r}\n")


def occupation_local_time(path: RbmPath) -> LocalTimePath:
    """Occupation-based local time of a recorded path, valued at every step."""
    sojourn = layer_sojourn_time(path.radii, path.distances, path.eps)
    values = np.cumsum(sojourn) / path.eps
    return LocalTimePath(steps=np.arange(1, path.n_steps + 1), values=values,
                         kind="occupation", dx=path.dx, eps=path.eps)


def levy_local_time(path: RbmPath, blocks: int) -> LocalTimePath:
    """Levy-style local time from hit indicators on an equal-block partition."""
    m = int(blocks)
    if m < 1 or path.n_steps % m != 0:
        raise ValueError("blocks must be a positive divisor of n_steps")
    block_len = path.n_steps // m
    hit_any = path.hit_mask.reshape(m, block_len).any(axis=1)
    inc = LEVY_FACTOR * math.sqrt(block_len * path.dx * path.dx / 3.0)
    values = np.cumsum(hit_any * inc)
    return LocalTimePath(steps=np.arange(1, m + 1) * block_len, values=values,
                         kind="levy", dx=path.dx, blocks=m)


def t_eps_estimate(path: RbmPath) -> float:
    """Elapsed-time diagnostic T_eps of a recorded path."""
    n_eps = int(path.in_eps.sum())
    r = np.where(path.in_eps, 0.0, path.radii)
    return (n_eps * (path.dx * path.dx) + float((r * r).sum())) / 3.0


class LocalTimeAccumulator:
    """Streaming per-path local-time totals over a StepBatch sequence.

    Tracks the sojourn-weighted occupation estimate, the raw eps-step
    count, T_eps, and optionally the Levy estimate, without materializing
    the walk.
    """

    def __init__(self, n_paths: int, dx: float, k_eps: int, n_steps: int,
                 levy_blocks: int | None = None):
        self.dx = float(dx)
        self.eps = int(k_eps) * self.dx
        self.n_steps = int(n_steps)
        self.eps_steps = np.zeros(n_paths, dtype=np.int64)
        self._sojourn = np.zeros(n_paths)
        self._interior_sq = np.zeros(n_paths)
        self.block_len = None
        if levy_blocks is not None:
            m = int(levy_blocks)
            if m < 1 or self.n_steps % m != 0:
                raise ValueError("levy_blocks must be a positive divisor of n_steps")
            self.block_len = self.n_steps // m
            self._block_hit = np.zeros(n_paths, dtype=bool)
            self._levy_inc = LEVY_FACTOR * math.sqrt(self.block_len * self.dx * self.dx / 3.0)
            self.levy = np.zeros(n_paths)

    def update(self, sb: StepBatch) -> None:
        self.eps_steps += sb.in_eps
        self._sojourn += layer_sojourn_time(sb.r, sb.d_pre, self.eps)
        r = np.where(sb.in_eps, 0.0, sb.r)
        self._interior_sq += r * r
        if self.block_len is not None:
            if sb.hit_idx.size:
                self._block_hit[sb.hit_idx] = True
            if sb.step % self.block_len == 0:
                self.levy += self._block_hit * self._levy_inc
                self._block_hit[:] = False

    @property
    def occupation(self) -> np.ndarray:
        return self._sojourn / self.eps

    @property
    def t_eps(self) -> np.ndarray:
        return (self.eps_steps * (self.dx * self.dx) + self._interior_sq) / 3.0
