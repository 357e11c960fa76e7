"""Lattice-walk variant of the reflecting Brownian path sampler.

Interior motion still uses maximal-radius walk-on-spheres jumps, but inside
the eps boundary layer the path moves on a cubic grid of spacing h = dx
anchored at the domain center: one of the six axis neighbors per step, each
with probability 1/6 (one such move advances time h^2 / 3).  A move leaving
the closed domain is pulled back to the nearest boundary point (recording a
hit there) and the path resumes from the nearest in-domain grid point; a
walk-on-spheres landing inside the eps layer is likewise snapped to the
nearest in-domain grid point.

The generator yields the same StepBatch stream as rbm.walk_steps, drawing
one uniform sphere direction per path per step; eps-layer steps convert the
direction to a lattice move through its largest component (axis and sign
are exactly uniform over the six moves by symmetry), so stream consumption
matches the walk-on-spheres sampler.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Domain
from .rbm import StepBatch, _BLOCK, _validate_walk_args
from .sampling import unit_sphere_sample

# The six lattice moves, in +x, -x, +y, -y, +z, -z order.
MOVES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0],
                  [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.float64)

# Snap candidates: grid offsets around the rounded cell, lexicographically
# ordered so argmin resolves distance ties deterministically.
_OFFSETS = np.array(sorted(itertools.product((-1, 0, 1), repeat=3)), dtype=np.float64)


def lattice_step(x, h: float, rng: np.random.Generator) -> np.ndarray:
    """Move each point to one of its six grid neighbors, probability 1/6 each."""
    x = np.asarray(x, dtype=np.float64)
    single = x.shape == (3,)
    pts = x[None, :] if single else x
    idx = rng.integers(0, 6, size=pts.shape[0])
    out = pts + float(h) * MOVES[idx]
    return out[0] if single else out


def _moves_from_directions(u: np.ndarray, h: float) -> np.ndarray:
    """Map sphere directions to lattice moves via the dominant component."""
    f = np.abs(u).argmax(axis=1)
    rows = np.arange(u.shape[0])
    move = np.zeros_like(u)
    move[rows, f] = np.where(u[rows, f] >= 0.0, h, -h)
    return move


def snap_to_grid(domain: Domain, points: np.ndarray, h: float) -> np.ndarray:
    """Nearest in-domain grid point to each input point.

    The grid is domain.center + h * Z^3.  Candidates come from the 27 cells
    around the rounded position; distance ties resolve to the smallest
    offset in lexicographic axis order.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    base = np.round((pts - domain.center) / h)
    cand = domain.center + h * (base[:, None, :] + _OFFSETS[None, :, :])
    ok = domain.contains(cand.reshape(-1, 3)).reshape(len(pts), -1)
    d2 = ((cand - pts[:, None, :]) ** 2).sum(axis=2)
    d2[~ok] = np.inf
    pick = d2.argmin(axis=1)
    if not np.isfinite(d2[np.arange(len(pts)), pick]).all():
        raise RuntimeError("no in-domain grid point within one cell; "
                           "grid spacing too coarse for this domain")
    out = cand[np.arange(len(pts)), pick]
    return out[0] if np.asarray(points).shape == (3,) else out


def lattice_walk_steps(domain: Domain, x0, dx: float, k_eps: int, n_steps: int,
                       rng: np.random.Generator, n_paths: int = 1):
    """Yield a StepBatch per step for n_paths lockstep lattice-RBM walks."""
    x0, dx, k, n_steps = _validate_walk_args(domain, x0, dx, k_eps, n_steps)
    eps = k * dx
    btol = domain.boundary_tolerance

    x = np.repeat(x0[None, :], n_paths, axis=0)
    d = np.full(n_paths, domain.distance_to_boundary(x0))
    step = 0
    while step < n_steps:
        block = min(_BLOCK, n_steps - step)
        dirs = unit_sphere_sample(rng, (block, n_paths))
        for j in range(block):
            step += 1
            u = dirs[j]
            in_eps = d <= eps
            near = d <= dx
            r = np.where(in_eps, dx, d)
            prop = np.where(in_eps[:, None],
                            x + _moves_from_directions(u, dx),
                            x + d[:, None] * u)
            inside = domain.contains(prop)
            d_prop = domain.distance_to_boundary(prop)
            hit = in_eps & (~inside | (d_prop <= btol))
            pull = hit | ~inside
            hit_points = np.empty((0, 3))
            if pull.any():
                idx = np.nonzero(pull)[0]
                feet = domain.nearest_boundary_point(prop[idx])
                prop[idx] = feet
                d_prop[idx] = 0.0
            hit_idx = np.nonzero(hit)[0]
            if hit_idx.size:
                hit_points = prop[hit_idx].copy()
            # anything now inside the eps layer continues from a grid point
            snap = d_prop <= eps
            if snap.any():
                idx = np.nonzero(snap)[0]
                snapped = snap_to_grid(domain, prop[idx], dx)
                moved = (snapped != prop[idx]).any(axis=1)
                prop[idx] = snapped
                if moved.any():
                    d_prop[idx[moved]] = domain.distance_to_boundary(snapped[moved])
            d_pre = d
            x = prop
            d = d_prop
            yield StepBatch(step, x, d, d_pre, r, in_eps, near, hit_idx, hit_points)


@dataclass
class LatticeLawReport:
    """Endpoint moments of the six-move lattice walk against the time law.

    For n steps of size h the coordinate variance should approach
    n * h^2 / 3 with vanishing cross-covariance and Gaussian kurtosis.
    """

    n_steps: int
    h: float
    samples: int
    expected_variance: float
    variances: np.ndarray        # (3,) per coordinate
    covariances: np.ndarray      # (3,) for the pairs (x,y), (x,z), (y,z)
    covariance_stderr: np.ndarray
    excess_kurtosis: np.ndarray  # (3,)
    kurtosis_stderr: float

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "h": self.h,
            "samples": self.samples,
            "expected_variance": self.expected_variance,
            "variances": self.variances.tolist(),
            "covariances": self.covariances.tolist(),
            "covariance_stderr": self.covariance_stderr.tolist(),
            "excess_kurtosis": self.excess_kurtosis.tolist(),
            "kurtosis_stderr": self.kurtosis_stderr,
        }


def appendix_time_law_check(n_steps: int, h: float, samples: int,
                            seed: int = 0) -> LatticeLawReport:
    """Sample endpoint moments of `samples` independent n-step lattice walks.

    The endpoint depends on the walk only through its move counts, so the
    counts are drawn directly from Multinomial(n, 1/6); the endpoint law is
    identical to stepping the walk and the check runs in seconds.
    """
    from .sampling import make_stream

    rng = make_stream(seed)
    counts = rng.multinomial(int(n_steps), [1.0 / 6.0] * 6, size=int(samples))
    pos = float(h) * np.stack([counts[:, 0] - counts[:, 1],
                               counts[:, 2] - counts[:, 3],
                               counts[:, 4] - counts[:, 5]], axis=1).astype(np.float64)
    centered = pos - pos.mean(axis=0)
    var = centered.var(axis=0, ddof=1)
    pairs = [(0, 1), (0, 2), (1, 2)]
    cov = np.array([(centered[:, i] * centered[:, j]).sum() / (samples - 1)
                    for i, j in pairs])
    cov_se = np.array([math.sqrt(var[i] * var[j] / samples) for i, j in pairs])
    m2 = (centered**2).mean(axis=0)
    m4 = (centered**4).mean(axis=0)
    kurt = m4 / m2**2 - 3.0
    return LatticeLawReport(
        n_steps=int(n_steps),
        h=float(h),
        samples=int(samples),
        expected_variance=n_steps * h * h / 3.0,
        variances=var,
        covariances=cov,
        covariance_stderr=cov_se,
        excess_kurtosis=kurt,
        kurtosis_stderr=math.sqrt(24.0 / samples),
    )
