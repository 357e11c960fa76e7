"""Monte Carlo solver for the interior Laplace problem with Neumann data.

The solution with normal derivative phi on the boundary is estimated at a
point x0 from N reflecting walks started there.  Each walk accumulates a
running count of time spent inside the eps = k*dx boundary layer, in units
of the fixed-step duration dx^2 / 3: a step contributes its expected
in-layer sojourn (see local_time.layer_step_weight), which is 1.0 for a dx
step well inside the layer, up to 4.0 for 2*dx steps, and a small tail
contribution eps^3 / (6 d) / (dx^2 / 3) for interior jumps whose sphere
touches the layer.  At every boundary hit the count is flushed as
phi(hit) * count into the walk's contribution and reset (a trailing count
with no later hit is discarded).  The estimate is

    u_hat(x0) = dx / (6 * k) * mean(per-walk contributions),

which is the occupation local-time approximation of the boundary integral
representation 1/2 E[ integral phi dL ].  The Levy estimator variant
replaces the count flushes by one increment sqrt(pi/2) * sqrt(block time)
per partition block that contains a hit, with phi taken at the block's
first hit, and scales by 1/2.

Estimates are defined up to an additive constant; align_and_error shifts
them against exact values before computing the relative l2 error.

Randomness is drawn from per-chunk streams (seed, point_index, chunk
index), reduced in chunk order with compensated summation, so results are
bitwise reproducible and independent of the worker count.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Domain
from .lattice import lattice_walk_steps
from .local_time import LEVY_FACTOR, layer_step_weight
from .rbm import RbmPath, _validate_walk_args, walk_steps
from .sampling import make_stream

log = logging.getLogger(__name__)

ESTIMATORS = ("occupation", "levy")
RBM_KINDS = ("wos", "lattice")

# Flux compatibility defects above this fraction trigger an advisory warning.
COMPATIBILITY_WARN = 0.01


class HarmonicTrigExp:
    """u(x, y, z) = sin(3x) sin(4y) exp(5z) + 5, harmonic since 9 + 16 = 25."""

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return np.sin(3.0 * x) * np.sin(4.0 * y) * np.exp(5.0 * z) + 5.0

    def gradient(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        s3x, c3x = np.sin(3.0 * x), np.cos(3.0 * x)
        s4y, c4y = np.sin(4.0 * y), np.cos(4.0 * y)
        e5z = np.exp(5.0 * z)
        return np.stack([3.0 * c3x * s4y * e5z,
                         4.0 * s3x * c4y * e5z,
                         5.0 * s3x * s4y * e5z], axis=-1)


@dataclass
class NormalFlux:
    """phi(p) = grad(field) . outward normal, evaluated at boundary points."""

    domain: Domain
    field: object  # needs a .gradient(points) method

    def __call__(self, p) -> np.ndarray:
        g = self.field.gradient(p)
        n = self.domain.outward_normal(p)
        return (g * n).sum(axis=-1)


@dataclass
class TabulatedFlux:
    """Nearest-neighbor lookup in a table of boundary points and flux values."""

    points: np.ndarray   # (m, 3)
    values: np.ndarray   # (m,)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(self.points) != len(self.values) or len(self.values) == 0:
            raise ValueError("flux table needs matching, nonempty points and values")

    def __call__(self, p) -> np.ndarray:
        q = np.atleast_2d(np.asarray(p, dtype=np.float64))
        d2 = ((q[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        out = self.values[d2.argmin(axis=1)]
        return out if np.asarray(p).ndim == 2 else out[0]


@dataclass
class NeumannProblem:
    """Domain plus boundary flux, with an optional exact solution."""

    domain: Domain
    flux: Callable
    u_exact: Callable | None = None

    def __post_init__(self):
        self._compat = None

    def compatibility_check(self, n: int = 200000,
                            seed: int = 202406) -> tuple[float, float]:
        """(defect, stderr): |surface integral of phi| over integral of |phi|.

        A well-posed problem has zero integral flux; this Monte Carlo
        surface quadrature is advisory only and cached per problem.
        """
        if self._compat is None:
            pts, w = self.domain.surface_sample(n, make_stream(seed))
            t = np.asarray(self.flux(pts), dtype=np.float64) * w
            denom = float(np.abs(t).sum())
            if denom == 0.0:
                self._compat = (0.0, 0.0)
            else:
                se = float(t.std(ddof=1)) * math.sqrt(len(t))
                self._compat = (abs(float(t.sum())) / denom, se / denom)
        return self._compat

    def compatibility_defect(self, n: int = 200000, seed: int = 202406) -> float:
        return self.compatibility_check(n, seed)[0]


def manufactured_neumann_data(domain: Domain) -> NeumannProblem:
    """Neumann problem whose exact solution is the trig-exp harmonic field."""
    sol = HarmonicTrigExp()
    return NeumannProblem(domain=domain, flux=NormalFlux(domain, sol), u_exact=sol)


@dataclass
class SolverConfig:
    """Run parameters for the Neumann solver."""

    dx: float
    k_eps: int
    n_paths: int
    n_steps: int
    seed: int = 0
    estimator: str = "occupation"
    rbm: str = "wos"
    workers: int = 1
    chunk_size: int = 4096
    report_steps: tuple = ()
    levy_blocks: int | None = None

    def __post_init__(self):
        if not self.dx > 0.0:
            raise ValueError("dx must be positive")
        if int(self.k_eps) != self.k_eps or self.k_eps < 2:
            raise ValueError("k_eps must be an integer >= 2")
        self.k_eps = int(self.k_eps)
        for name in ("n_paths", "n_steps", "workers", "chunk_size"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
            setattr(self, name, int(v))
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        self.seed = int(self.seed)
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.rbm not in RBM_KINDS:
            raise ValueError(f"rbm must be one of {RBM_KINDS}")
        steps = tuple(sorted(set(int(s) for s in self.report_steps)))
        if steps and not (1 <= steps[0] and steps[-1] <= self.n_steps):
            raise ValueError("report_steps must lie in [1, n_steps]")
        self.report_steps = steps
        if self.estimator == "levy":
            b = self.block_length
            if any(s % b for s in steps):
                raise ValueError("report_steps must align with Levy blocks")

    @property
    def eps(self) -> float:
        return self.k_eps * self.dx

    @property
    def resolved_levy_blocks(self) -> int:
        m = self.levy_blocks if self.levy_blocks is not None else max(1, self.n_steps // 10)
        if m < 1 or self.n_steps % m != 0:
            raise ValueError("levy_blocks must be a positive divisor of n_steps")
        return m

    @property
    def block_length(self) -> int:
        return self.n_steps // self.resolved_levy_blocks


@dataclass
class EstimateSummary:
    estimate: float
    std: float
    stderr: float


@dataclass
class SolverResult:
    """Estimate at one point plus spread, telemetry, and the config echo."""

    estimate: float
    std: float
    stderr: float
    n_paths: int
    x0: np.ndarray
    point_index: int
    config: SolverConfig
    checkpoints: dict
    elapsed_seconds: float
    total_steps: int
    compatibility_defect: float


def path_contribution(path: RbmPath, flux: Callable) -> float:
    """Count/flush contribution of one recorded walk.

    Every step increments the pending count by its in-layer sojourn weight
    (a hit step's own increment included); each hit flushes
    phi(hit) * count and resets it; a trailing count never flushed is
    discarded.
    """
    idx = np.nonzero(path.hit_mask)[0]
    if idx.size == 0:
        return 0.0
    w = layer_step_weight(path.radii, path.distances, path.eps, path.dx)
    # per-segment running sums, kept in step order so the arithmetic matches
    # the streaming solver's count accumulator bitwise
    counts = np.empty(idx.size)
    prev = 0
    for j, i in enumerate(idx):
        counts[j] = np.cumsum(w[prev:i + 1])[-1]
        prev = i + 1
    vals = np.asarray(flux(path.hit_points[idx]), dtype=np.float64)
    return float(sum((vals * counts).tolist()))


def _chunk_layout(n_paths: int, chunk_size: int) -> list[tuple[int, int]]:
    sizes = [chunk_size] * (n_paths // chunk_size)
    if n_paths % chunk_size:
        sizes.append(n_paths % chunk_size)
    return list(enumerate(sizes))


def _steppers(kind: str):
    return walk_steps if kind == "wos" else lattice_walk_steps


def _run_chunk(task):
    """Simulate one chunk of walks; returns per-path contributions."""
    problem, x0, cfg, point_index, chunk_idx, size = task
    rng = make_stream(cfg.seed, point_index, chunk_idx)
    gen = _steppers(cfg.rbm)(problem.domain, x0, cfg.dx, cfg.k_eps,
                             cfg.n_steps, rng, size)
    contrib = np.zeros(size)
    snapshots = {}
    report = frozenset(cfg.report_steps)
    if cfg.estimator == "occupation":
        eps = cfg.eps
        count = np.zeros(size)
        for sb in gen:
            count += layer_step_weight(sb.r, sb.d_pre, eps, cfg.dx)
            k = sb.hit_idx
            if k.size:
                vals = np.asarray(problem.flux(sb.hit_points), dtype=np.float64)
                contrib[k] += vals * count[k]
                count[k] = 0
            if sb.step in report:
                snapshots[sb.step] = contrib.copy()
    else:
        block_len = cfg.block_length
        inc = LEVY_FACTOR * math.sqrt(block_len * cfg.dx * cfg.dx / 3.0)
        block_hit = np.zeros(size, dtype=bool)
        block_phi = np.zeros(size)
        for sb in gen:
            k = sb.hit_idx
            if k.size:
                fresh = ~block_hit[k]
                if fresh.any():
                    rows = k[fresh]
                    block_phi[rows] = np.asarray(
                        problem.flux(sb.hit_points[fresh]), dtype=np.float64)
                    block_hit[rows] = True
            if sb.step % block_len == 0:
                contrib += np.where(block_hit, block_phi, 0.0) * inc
                block_hit[:] = False
            if sb.step in report:
                snapshots[sb.step] = contrib.copy()
    return chunk_idx, contrib, snapshots


def _summarize(scaled: np.ndarray) -> EstimateSummary:
    n = scaled.shape[0]
    estimate = math.fsum(scaled.tolist()) / n
    std = float(np.std(scaled, ddof=1)) if n > 1 else 0.0
    return EstimateSummary(estimate=estimate, std=std, stderr=std / math.sqrt(n))


def solve(problem: NeumannProblem, x0, config: SolverConfig,
          point_index: int = 0) -> SolverResult:
    """Estimate the Neumann solution at x0 from config.n_paths walks."""
    t0 = time.perf_counter()
    x0v, _, _, _ = _validate_walk_args(problem.domain, x0, config.dx,
                                       config.k_eps, config.n_steps)
    defect, defect_se = problem.compatibility_check()
    if defect > COMPATIBILITY_WARN and defect > 3.0 * defect_se:
        log.warning("flux compatibility defect %.2f%% exceeds %.0f%% (advisory)",
                    100.0 * defect, 100.0 * COMPATIBILITY_WARN)

    layout = _chunk_layout(config.n_paths, config.chunk_size)
    tasks = [(problem, x0v, config, point_index, cid, size) for cid, size in layout]
    results = {}
    if config.workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(min(config.workers, len(tasks))) as pool:
            for cid, contrib, snaps in pool.imap_unordered(_run_chunk, tasks):
                results[cid] = (contrib, snaps)
                log.info("point %d: %d/%d chunks done", point_index,
                         len(results), len(tasks))
    else:
        for task in tasks:
            cid, contrib, snaps = _run_chunk(task)
            results[cid] = (contrib, snaps)
            log.info("point %d: %d/%d chunks done", point_index,
                     len(results), len(tasks))

    scale = config.dx / (6.0 * config.k_eps) if config.estimator == "occupation" else 0.5
    contrib = np.concatenate([results[cid][0] for cid, _ in layout]) * scale
    summary = _summarize(contrib)
    checkpoints = {}
    for step in config.report_steps:
        snap = np.concatenate([results[cid][1][step] for cid, _ in layout]) * scale
        checkpoints[step] = _summarize(snap)

    return SolverResult(
        estimate=summary.estimate,
        std=summary.std,
        stderr=summary.stderr,
        n_paths=config.n_paths,
        x0=x0v,
        point_index=point_index,
        config=config,
        checkpoints=checkpoints,
        elapsed_seconds=time.perf_counter() - t0,
        total_steps=config.n_paths * config.n_steps,
        compatibility_defect=defect,
    )


def align_and_error(estimates, exact, anchor: str = "first"):
    """Shift estimates onto exact values; returns (shift, shifted, rel l2 error).

    anchor="first" matches the first point exactly; anchor="mean" matches
    the means.
    """
    est = np.asarray(estimates, dtype=np.float64).reshape(-1)
    ex = np.asarray(exact, dtype=np.float64).reshape(-1)
    if est.shape != ex.shape or est.size == 0:
        raise ValueError("estimates and exact values must have equal, nonzero length")
    if anchor == "first":
        shift = float(ex[0] - est[0])
    elif anchor == "mean":
        shift = float(ex.mean() - est.mean())
    else:
        raise ValueError("anchor must be 'first' or 'mean'")
    shifted = est + shift
    denom = float(np.linalg.norm(ex))
    if denom == 0.0:
        raise ValueError("exact values must not be identically zero")
    err = float(np.linalg.norm(shifted - ex)) / denom
    return shift, shifted, err
