"""Experiment orchestration: configs, evaluation points, runs, reports.

An experiment solves the Neumann problem at a family of interior points
(a circle, a segment, or an explicit list), aligns the estimates against
the exact solution by an additive shift, and reports the relative l2
error plus per-point values.  Configs round-trip through TOML or JSON;
reports are written as JSON with a flat CSV of per-point values for
plotting.

Each evaluation point runs its own independent paths on RNG streams keyed
by (seed, point index, chunk index), so the error profile has no
cross-point correlation and results are reproducible for any worker
count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .geometry import Domain, make_domain
from .local_time import occupation_local_time
from .neumann import (NeumannProblem, SolverConfig, TabulatedFlux,
                      align_and_error, manufactured_neumann_data, solve)
from .rbm import simulate_path
from .sampling import make_stream

log = logging.getLogger(__name__)

# Monitoring-circle angular step: successive points sit 2*pi/30 apart.
CIRCLE_STEP = 2.0 * math.pi / 30.0

SEGMENT_START = (0.4, 0.4, 0.6)
SEGMENT_END = (0.1, 0.0, 0.0)


def circle_points(r: float = 0.6, polar: float = math.pi / 4.0,
                  count: int = 15) -> np.ndarray:
    """Points (r cos t sin polar, r sin t sin polar, r cos polar), t = i*2pi/30."""
    if count < 1:
        raise ValueError("count must be at least 1")
    t = np.arange(1, count + 1) * CIRCLE_STEP
    sp, cp = math.sin(polar), math.cos(polar)
    return np.stack([r * np.cos(t) * sp,
                     r * np.sin(t) * sp,
                     np.full(count, r * cp)], axis=1)


def segment_points(a, b, count: int = 15) -> np.ndarray:
    """count uniformly spaced points from a to b, endpoints included."""
    if count < 2:
        raise ValueError("count must be at least 2")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    t = np.linspace(0.0, 1.0, count)[:, None]
    return a + t * (b - a)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one error experiment.

    The domain extent is interpreted by kind: box half-widths, ball
    radius, or ellipsoid semi-axes.  points_kind selects the monitoring
    family; "list" uses points_list verbatim.
    """

    domain_kind: str = "box"
    domain_extent: tuple = (1.0, 1.0, 1.0)
    domain_center: tuple = (0.0, 0.0, 0.0)
    dx: float = 5e-4
    k_eps: int = 6
    n_paths: int = 20000
    n_steps: int = 30000
    seed: int = 0
    estimator: str = "occupation"
    rbm: str = "wos"
    workers: int = 1
    chunk_size: int = 4096
    report_steps: tuple = ()
    levy_blocks: Optional[int] = None
    points_kind: str = "circle"
    circle_radius: float = 0.6
    circle_polar: float = math.pi / 4.0
    points_count: int = 15
    segment_start: tuple = SEGMENT_START
    segment_end: tuple = SEGMENT_END
    points_list: Optional[list] = None
    flux_table: Optional[str] = None
    anchor: str = "first"
    out: Optional[str] = None
    dump_paths: bool = False

    def __post_init__(self):
        self.domain_extent = _as_tuple(self.domain_extent)
        self.domain_center = tuple(float(v) for v in np.atleast_1d(self.domain_center))
        self.report_steps = tuple(int(s) for s in self.report_steps)
        if self.points_kind not in ("circle", "segment", "list"):
            raise ValueError("points_kind must be 'circle', 'segment', or 'list'")
        if self.points_kind == "list" and not self.points_list:
            raise ValueError("points_kind 'list' needs a nonempty points_list")

    def domain(self) -> Domain:
        kind = self.domain_kind.lower()
        ext = self.domain_extent
        if kind in ("box", "cube"):
            return make_domain(kind, half_widths=ext, center=self.domain_center)
        if kind in ("ball", "sphere"):
            return make_domain(kind, radius=ext[0], center=self.domain_center)
        return make_domain(kind, semi_axes=ext, center=self.domain_center)

    def problem(self) -> NeumannProblem:
        domain = self.domain()
        if self.flux_table is None:
            return manufactured_neumann_data(domain)
        table = np.loadtxt(self.flux_table, delimiter=",", skiprows=1, ndmin=2)
        if table.shape[1] != 4:
            raise ValueError("flux table must have columns x,y,z,phi")
        return NeumannProblem(domain=domain,
                              flux=TabulatedFlux(table[:, :3], table[:, 3]))

    def evaluation_points(self) -> np.ndarray:
        if self.points_kind == "circle":
            return circle_points(self.circle_radius, self.circle_polar,
                                 self.points_count)
        if self.points_kind == "segment":
            return segment_points(self.segment_start, self.segment_end,
                                  self.points_count)
        return np.asarray(self.points_list, dtype=np.float64).reshape(-1, 3)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dx=self.dx, k_eps=self.k_eps, n_paths=self.n_paths,
            n_steps=self.n_steps, seed=self.seed, estimator=self.estimator,
            rbm=self.rbm, workers=self.workers, chunk_size=self.chunk_size,
            report_steps=self.report_steps, levy_blocks=self.levy_blocks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain_extent"] = list(self.domain_extent)
        d["domain_center"] = list(self.domain_center)
        d["report_steps"] = list(self.report_steps)
        d["segment_start"] = list(self.segment_start)
        d["segment_end"] = list(self.segment_end)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        kw = dict(d)
        for key in ("domain_extent", "domain_center", "report_steps",
                    "segment_start", "segment_end"):
            if key in kw:
                kw[key] = tuple(kw[key]) if isinstance(kw[key], (list, tuple)) \
                    else (kw[key],)
        return cls(**kw)

    def save(self, path) -> None:
        path = Path(path)
        d = self.to_dict()
        if path.suffix == ".json":
            path.write_text(json.dumps(d, indent=2) + "\n")
        else:
            path.write_text(_emit_toml(d))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if path.suffix == ".json":
            d = json.loads(path.read_text())
        else:
            with open(path, "rb") as fh:
                d = tomllib.load(fh)
        return cls.from_dict(d)


def _as_tuple(v) -> tuple:
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    return tuple(float(x) for x in arr)


def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")


def _emit_toml(d: dict) -> str:
    """Flat key = value TOML; the config schema keeps every value scalar
    or array so no tables are needed."""
    return "".join(f"{k} = {_toml_scalar(v)}\n" for k, v in d.items())


@dataclass
class RunReport:
    """Per-point estimates plus the aggregate error and a config echo."""

    config: dict
    points: list
    raw: list
    stderr: list
    exact: Optional[list]
    shifted: Optional[list]
    shift: Optional[float]
    rel_error: Optional[float]
    checkpoint_errors: dict
    compatibility_defect: float
    total_steps: int
    elapsed_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        with open(out / "points.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "x", "y", "z", "exact", "raw", "shifted", "stderr"])
            for i, p in enumerate(self.points):
                w.writerow([
                    i, p[0], p[1], p[2],
                    self.exact[i] if self.exact is not None else "",
                    self.raw[i],
                    self.shifted[i] if self.shifted is not None else "",
                    self.stderr[i],
                ])


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Solve at every evaluation point and assemble the aligned error report."""
    t0 = time.perf_counter()
    problem = cfg.problem()
    domain = problem.domain
    points = cfg.evaluation_points()
    inside = domain.contains(points)
    deep = domain.distance_to_boundary(points) > domain.boundary_tolerance
    if not (inside & deep).all():
        bad = np.nonzero(~(inside & deep))[0]
        raise ValueError(f"evaluation points {bad.tolist()} are not strictly "
                         "inside the domain")
    solver_cfg = cfg.solver_config()

    results = []
    for i, p in enumerate(points):
        res = solve(problem, p, solver_cfg, point_index=i)
        results.append(res)
        log.info("point %d/%d done in %.1fs: estimate %.6g (stderr %.2g)",
                 i + 1, len(points), res.elapsed_seconds, res.estimate,
                 res.stderr)

    raw = [r.estimate for r in results]
    stderr = [r.stderr for r in results]
    exact = shifted = None
    shift = rel_error = None
    checkpoint_errors: dict = {}
    if problem.u_exact is not None:
        exact = [float(v) for v in np.asarray(problem.u_exact(points))]
        shift, shifted_arr, rel_error = align_and_error(raw, exact, cfg.anchor)
        shifted = shifted_arr.tolist()
        for step in solver_cfg.report_steps:
            raw_s = [r.checkpoints[step].estimate for r in results]
            s_shift, s_vals, s_err = align_and_error(raw_s, exact, cfg.anchor)
            checkpoint_errors[str(step)] = {
                "rel_error": s_err, "shift": s_shift, "raw": raw_s,
                "shifted": s_vals.tolist()}

    report = RunReport(
        config=cfg.to_dict(),
        points=points.tolist(),
        raw=raw,
        stderr=stderr,
        exact=exact,
        shifted=shifted,
        shift=shift,
        rel_error=rel_error,
        checkpoint_errors=checkpoint_errors,
        compatibility_defect=results[0].compatibility_defect,
        total_steps=sum(r.total_steps for r in results),
        elapsed_seconds=time.perf_counter() - t0,
    )
    if cfg.out is not None:
        report.write(cfg.out)
        if cfg.dump_paths:
            dump_sample_paths(cfg, points, Path(cfg.out))
    return report


def dump_sample_paths(cfg: ExperimentConfig, points: np.ndarray, out: Path) -> None:
    """Record one walk per evaluation point with its running local time.

    The walk uses the stream (seed, point index, 0), i.e. the run's first
    path when chunk_size is 1.
    """
    domain = cfg.domain()
    out.mkdir(parents=True, exist_ok=True)
    for i, p in enumerate(points):
        rng = make_stream(cfg.seed, i, 0)
        path = simulate_path(domain, p, cfg.dx, cfg.k_eps, cfg.n_steps, rng)
        lt = occupation_local_time(path)
        with open(out / f"path_{i:03d}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "x", "y", "z", "radius", "in_eps", "hit",
                        "local_time"])
            for s in range(path.n_steps):
                q = path.positions[s]
                w.writerow([s + 1, q[0], q[1], q[2], path.radii[s],
                            int(path.in_eps[s]), int(path.hit_mask[s]),
                            lt.values[s]])


def paper_defaults(kind: str, full: bool = False) -> ExperimentConfig:
    """Reference experiment presets for the three benchmark domains.

    Scaled runs use 2e4 paths per point; full=True restores 2e5.
    """
    kind = kind.lower()
    n_paths = 200000 if full else 20000
    if kind == "cube":
        return ExperimentConfig(domain_kind="box", domain_extent=(1.0, 1.0, 1.0),
                                dx=5e-4, k_eps=6, n_paths=n_paths, n_steps=30000)
    if kind == "sphere":
        return ExperimentConfig(domain_kind="ball", domain_extent=(1.0,),
                                dx=5e-4, k_eps=5, n_paths=n_paths, n_steps=30000)
    if kind == "ellipsoid":
        return ExperimentConfig(domain_kind="ellipsoid",
                                domain_extent=(3.0, 2.0, 1.0),
                                dx=4e-4, k_eps=5, n_paths=n_paths, n_steps=30000)
    raise ValueError("kind must be 'cube', 'sphere', or 'ellipsoid'")
