"""Walk-on-spheres solver for the Laplace problem with Dirichlet data.

Plain absorbed walk-on-spheres: from an interior point, jump to a uniform
point on the maximal inscribed sphere until the path is within a small
absorption shell of the boundary, then read the boundary data at the
nearest boundary point.  The average over paths estimates u(x0).

This is the classical fast-converging case (expected step count grows like
log(1/shell width)); it serves as an independent consistency check for the
geometry kernels and as a baseline next to the reflecting solver.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Callable, Optional

import numpy as np

from .geometry import Domain
from .neumann import HarmonicTrigExp, _chunk_layout
from .sampling import make_stream, unit_sphere_sample

ABSORB_SHELL_REL = 1e-4  # default absorption shell, relative to diameter


@dataclass
class DirichletProblem:
    """Domain plus boundary values g, with an optional exact solution."""

    domain: Domain
    boundary_values: Callable[[np.ndarray], np.ndarray]
    u_exact: Optional[Callable[[np.ndarray], np.ndarray]] = None


def manufactured_dirichlet_data(domain: Domain) -> DirichletProblem:
    """Dirichlet problem whose solution is the reference harmonic field."""
    field = HarmonicTrigExp()
    return DirichletProblem(domain=domain, boundary_values=field, u_exact=field)


@dataclass
class DirichletResult:
    estimate: float
    std: float
    stderr: float
    n_paths: int
    mean_steps: float
    max_steps: int
    capped_paths: int
    eps_abs: float
    x0: np.ndarray
    elapsed_seconds: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "std": self.std,
            "stderr": self.stderr,
            "n_paths": self.n_paths,
            "mean_steps": self.mean_steps,
            "max_steps": self.max_steps,
            "capped_paths": self.capped_paths,
            "eps_abs": self.eps_abs,
            "x0": np.asarray(self.x0).tolist(),
            "elapsed_seconds": self.elapsed_seconds,
        }


def _absorbed_chunk(task):
    problem, x0, eps_abs, max_steps, seed, chunk_idx, size = task
    domain = problem.domain
    rng = make_stream(seed, chunk_idx)
    x = np.repeat(np.asarray(x0, dtype=np.float64)[None, :], size, axis=0)
    ids = np.arange(size)
    values = np.empty(size)
    steps = np.zeros(size, dtype=np.int64)
    capped = 0
    it = 0
    while ids.size:
        d = domain.distance_to_boundary(x)
        done = d <= eps_abs
        if it >= max_steps:
            capped = int((~done).sum())
            done = np.ones_like(done)
        if done.any():
            feet = domain.nearest_boundary_point(x[done])
            values[ids[done]] = problem.boundary_values(feet)
            steps[ids[done]] = it
            keep = ~done
            x, d, ids = x[keep], d[keep], ids[keep]
        if not ids.size:
            break
        u = unit_sphere_sample(rng, (ids.size,))
        x = x + d[:, None] * u
        it += 1
    return chunk_idx, values, steps, capped


def solve_dirichlet(problem: DirichletProblem, x0, n_paths: int, seed: int = 0,
                    eps_abs: Optional[float] = None, max_steps: int = 10000,
                    workers: int = 1, chunk_size: int = 4096) -> DirichletResult:
    """Estimate u(x0) for the Dirichlet problem by absorbed walk-on-spheres.

    Paths are simulated in chunks with one RNG stream per chunk keyed by
    (seed, chunk index), so results do not depend on the worker count.
    """
    domain = problem.domain
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (3,):
        raise ValueError("x0 must be a single 3-vector")
    if not domain.contains(x0):
        raise ValueError("start point lies outside the closed domain")
    if domain.distance_to_boundary(x0) <= domain.boundary_tolerance:
        raise ValueError("start point lies on the boundary")
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if eps_abs is None:
        eps_abs = ABSORB_SHELL_REL * domain.diameter
    if eps_abs <= 0.0:
        raise ValueError("absorption shell width must be positive")

    t0 = time.perf_counter()
    tasks = [(problem, x0, float(eps_abs), int(max_steps), int(seed), i, s)
             for i, s in _chunk_layout(n_paths, chunk_size)]
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            parts = list(pool.imap_unordered(_absorbed_chunk, tasks))
        parts.sort(key=lambda p: p[0])
    else:
        parts = [_absorbed_chunk(t) for t in tasks]

    values = np.concatenate([p[1] for p in parts])
    steps = np.concatenate([p[2] for p in parts])
    capped = sum(p[3] for p in parts)
    mean = math.fsum(values.tolist()) / n_paths
    if n_paths > 1:
        std = float(values.std(ddof=1))
        stderr = std / math.sqrt(n_paths)
    else:
        std = stderr = 0.0
    return DirichletResult(
        estimate=mean, std=std, stderr=stderr, n_paths=int(n_paths),
        mean_steps=float(steps.mean()), max_steps=int(max_steps),
        capped_paths=int(capped), eps_abs=float(eps_abs), x0=x0,
        elapsed_seconds=time.perf_counter() - t0,
    )
