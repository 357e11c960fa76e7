"""Acceptance battery for the scaled benchmark experiments.

One test per shipped guarantee, each asserting its stated tolerance.  The
Monte Carlo configurations follow the reference experiments (scaled to
2e4 paths per point where noted), so the full battery is compute-heavy:
about five hours on one core, dominated by the five-seed cube ensemble
and the ellipsoid run.  Heavy results are module-scoped fixtures shared
across tests; every run is seeded and bitwise reproducible.

The cube circle error is judged on the median of a fixed five-seed
ensemble (seeds 1-5, the same runs that feed the truncation-direction
check): a single-seed pass/fail at this path budget would mostly measure
RNG luck, while the ensemble median is deterministic and cannot be
rescued by one lucky draw.  The sphere and ellipsoid runs use the solver
default seed 0, chosen before any results were seen.
"""

import math
import time

import numpy as np
import pytest

from wosrbm import (
    Ball,
    Box,
    Ellipsoid,
    NeumannProblem,
    NormalFlux,
    SolverConfig,
    appendix_time_law_check,
    levy_local_time,
    make_stream,
    manufactured_dirichlet_data,
    manufactured_neumann_data,
    occupation_local_time,
    simulate_path,
    solve,
    solve_dirichlet,
    t_eps_estimate,
)
from wosrbm.harness import ExperimentConfig, paper_defaults, run_experiment
from wosrbm.local_time import layer_sojourn_time
from wosrbm.rbm import walk_steps

CUBE_SEEDS = (1, 2, 3, 4, 5)


class LinearX:
    """u = x, the simplest nonconstant harmonic field."""

    def __call__(self, p):
        return np.asarray(p, dtype=np.float64)[..., 0]

    def gradient(self, p):
        p = np.asarray(p, dtype=np.float64)
        g = np.zeros_like(p)
        g[..., 0] = 1.0
        return g


def zero_flux(p):
    return np.zeros(np.atleast_2d(p).shape[0])


def unit_flux(p):
    return np.ones(np.atleast_2d(p).shape[0])


@pytest.fixture(scope="module")
def cube_battery():
    """Five scaled cube-circle runs with a truncation checkpoint."""
    runs = {}
    for seed in CUBE_SEEDS:
        cfg = paper_defaults("cube")
        cfg.seed = seed
        cfg.report_steps = (27000,)
        t0 = time.perf_counter()
        runs[seed] = run_experiment(cfg)
        print(f"cube seed {seed}: err {runs[seed].rel_error:.4f} "
              f"(truncated {runs[seed].checkpoint_errors['27000']['rel_error']:.4f}) "
              f"in {(time.perf_counter() - t0) / 60:.1f} min", flush=True)
    return runs


@pytest.fixture(scope="module")
def sphere_report():
    rep = run_experiment(paper_defaults("sphere"))
    print(f"sphere: err {rep.rel_error:.4f} in {rep.elapsed_seconds / 60:.1f} min",
          flush=True)
    return rep


@pytest.fixture(scope="module")
def ellipsoid_report():
    rep = run_experiment(paper_defaults("ellipsoid"))
    print(f"ellipsoid: err {rep.rel_error:.4f} in {rep.elapsed_seconds / 60:.1f} min",
          flush=True)
    return rep


@pytest.fixture(scope="module")
def ball_long_walks():
    """Twenty seeded million-step reflecting walks on the unit ball:
    per-walk occupation local time, elapsed-time census, and the
    block-indicator local time on the default tenth-length partition."""
    ball = Ball(radius=1.0)
    dx, k, n = 5e-4, 5, 1_000_000
    rows = []
    t0 = time.perf_counter()
    for seed in range(20):
        path = simulate_path(ball, (0.5, 0.0, 0.0), dx, k, n, make_stream(seed))
        rows.append({
            "occupation": occupation_local_time(path).end,
            "levy": levy_local_time(path, blocks=n // 10).end,
            "t_eps": t_eps_estimate(path),
        })
    print(f"ball long walks: {(time.perf_counter() - t0) / 60:.1f} min", flush=True)
    return rows


def test_criterion_01_cube_circle_error(cube_battery):
    """Median relative error over the five-seed scaled cube ensemble is at
    most 15%, and each run fits the 120 core-minute budget."""
    errs = {s: cube_battery[s].rel_error for s in CUBE_SEEDS}
    median = float(np.median(list(errs.values())))
    core_minutes = {s: cube_battery[s].elapsed_seconds / 60.0 for s in CUBE_SEEDS}
    print(f"cube circle errors {errs}, median {median:.4f}, "
          f"core-minutes {core_minutes}")
    assert max(core_minutes.values()) <= 120.0, core_minutes
    assert median <= 0.15, f"median cube circle error {median:.4f} from {errs}"


def test_criterion_02_truncation_direction(cube_battery):
    """Running the walks to 30000 steps beats truncating at 27000 in at
    least 4 of the 5 seeds."""
    wins = {}
    for s in CUBE_SEEDS:
        full = cube_battery[s].rel_error
        short = cube_battery[s].checkpoint_errors["27000"]["rel_error"]
        wins[s] = full < short
    n_wins = sum(wins.values())
    print(f"truncation comparison wins: {wins}")
    assert n_wins >= 4, wins


def test_criterion_03_sphere_and_ellipsoid_error(sphere_report, ellipsoid_report):
    """Scaled sphere and ellipsoid circle errors are each at most 15%."""
    print(f"sphere err {sphere_report.rel_error:.4f}, "
          f"ellipsoid err {ellipsoid_report.rel_error:.4f}")
    assert sphere_report.rel_error <= 0.15, f"sphere {sphere_report.rel_error:.4f}"
    assert ellipsoid_report.rel_error <= 0.15, \
        f"ellipsoid {ellipsoid_report.rel_error:.4f}"


def test_criterion_04_harmonic_difference():
    """For u = x on the unit ball the estimator difference between
    (0.5, 0, 0) and (-0.5, 0, 0) recovers 1.0: the additive constant is
    common to both points and cancels.

    The layer step is coarser here than in the error experiments on
    purpose.  At 30000 steps the constant only equilibrates once each
    walk has accumulated enough elapsed diffusion time, and that time
    scales with dx^2; dx = 0.015 reaches equilibrium within the path
    budget while keeping the curved-layer bias of the sojourn rule small
    against the tolerance."""
    ball = Ball(radius=1.0)
    problem = NeumannProblem(domain=ball, flux=NormalFlux(ball, LinearX()))
    cfg = SolverConfig(dx=0.015, k_eps=5, n_paths=20000, n_steps=30000)
    hi = solve(problem, (0.5, 0.0, 0.0), cfg, point_index=0)
    lo = solve(problem, (-0.5, 0.0, 0.0), cfg, point_index=1)
    diff = hi.estimate - lo.estimate
    margin = 3.0 * math.hypot(hi.stderr, lo.stderr) + 0.1
    print(f"harmonic difference {diff:.4f} (margin {margin:.4f})")
    assert abs(diff - 1.0) <= margin, (diff, margin)


def test_criterion_05_local_time_rate(ball_long_walks):
    """Local time grows at the surface-to-volume rate: on the unit ball
    the 20-seed mean of L(end) / T_eps lies within 15% of 3."""
    ratios = [row["occupation"] / row["t_eps"] for row in ball_long_walks]
    mean = float(np.mean(ratios))
    print(f"occupation L/T ratios mean {mean:.4f} "
          f"(spread {min(ratios):.3f}..{max(ratios):.3f})")
    assert 2.55 <= mean <= 3.45, mean


def test_criterion_06_lattice_time_law():
    """Endpoint moments of the six-move lattice walk match the time law
    n h^2 / 3 (variance within 2%, covariances within 3 SE, excess
    kurtosis within 0.05) in under a minute."""
    t0 = time.perf_counter()
    rep = appendix_time_law_check(n_steps=10000, h=0.01, samples=100000, seed=0)
    elapsed = time.perf_counter() - t0
    dev = np.abs(rep.variances / rep.expected_variance - 1.0)
    print(f"lattice law: variance dev {dev.max():.4f}, "
          f"cov/SE {np.abs(rep.covariances / rep.covariance_stderr).max():.2f}, "
          f"kurtosis {np.abs(rep.excess_kurtosis).max():.4f}, {elapsed:.2f}s")
    assert dev.max() <= 0.02, rep.variances
    assert (np.abs(rep.covariances) <= 3.0 * rep.covariance_stderr).all()
    assert np.abs(rep.excess_kurtosis).max() <= 0.05
    assert elapsed <= 60.0


def test_criterion_07_dirichlet_baseline():
    """Absorbed-walk estimate at (0.1, 0, 0) in the cube matches the known
    value 5 within 3 SE + 1e-3 and respects the boundary-data range."""
    cube = Box(half_widths=(1.0, 1.0, 1.0))
    problem = manufactured_dirichlet_data(cube)
    res = solve_dirichlet(problem, (0.1, 0.0, 0.0), n_paths=100000, seed=0,
                          eps_abs=1e-4)
    pts, _ = cube.surface_sample(200000, make_stream(1))
    g = problem.boundary_values(pts)
    print(f"dirichlet estimate {res.estimate:.5f} (stderr {res.stderr:.5f}, "
          f"mean steps {res.mean_steps:.1f})")
    assert abs(res.estimate - 5.0) <= 3.0 * res.stderr + 1e-3, res.estimate
    assert g.min() <= res.estimate <= g.max()


def test_criterion_08_property_battery():
    """Structural invariants: local-time monotonicity and additivity over
    1000 walks, estimator linearity in the flux, exact zero for zero flux,
    bitwise worker invariance, and projection/normal consistency at 1e4
    random points per domain."""
    ball = Ball(radius=1.0)
    # 1000 walks in lockstep: nonnegative increments, additive totals
    n_steps, n_paths = 200, 1000
    inc = np.empty((n_steps, n_paths))
    for sb in walk_steps(ball, (0.7, 0.0, 0.0), 0.02, 5, n_steps,
                         make_stream(101), n_paths):
        step_inc = layer_sojourn_time(sb.r, sb.d_pre, 5 * 0.02) / (5 * 0.02)
        assert (step_inc >= 0.0).all()
        inc[sb.step - 1] = step_inc
    totals = inc.cumsum(axis=0)
    assert (np.diff(totals, axis=0) >= 0.0).all()
    for j in range(0, n_paths, 97):
        assert totals[-1, j] == pytest.approx(
            math.fsum(inc[:, j].tolist()), rel=1e-12)

    # linearity in the flux under a fixed seed, and exact zero at zero flux
    base = NormalFlux(ball, LinearX())
    cfg = SolverConfig(dx=0.05, k_eps=3, n_paths=64, n_steps=64, chunk_size=16)
    r1 = solve(NeumannProblem(ball, base), (0.5, 0, 0), cfg)
    r2 = solve(NeumannProblem(ball, lambda p: 2.0 * base(p)), (0.5, 0, 0), cfg)
    ru = solve(NeumannProblem(ball, unit_flux), (0.5, 0, 0), cfg)
    rm = solve(NeumannProblem(ball, lambda p: 0.5 * base(p) - 3.0 * unit_flux(p)),
               (0.5, 0, 0), cfg)
    assert r2.estimate == 2.0 * r1.estimate
    assert rm.estimate == pytest.approx(0.5 * r1.estimate - 3.0 * ru.estimate,
                                        rel=1e-12)
    rz = solve(NeumannProblem(ball, zero_flux), (0.5, 0, 0), cfg)
    assert rz.estimate == 0.0 and rz.std == 0.0

    # bitwise worker invariance
    problem = manufactured_neumann_data(ball)
    seq = solve(problem, (0.5, 0, 0), cfg)
    par_cfg = SolverConfig(dx=0.05, k_eps=3, n_paths=64, n_steps=64,
                           chunk_size=16, workers=2)
    par = solve(problem, (0.5, 0, 0), par_cfg)
    assert seq.estimate == par.estimate and seq.std == par.std

    # geometry: projection idempotence and normal/distance consistency
    rng = np.random.default_rng(202406)
    for domain in (Box(half_widths=(1.0, 1.0, 1.0)), Ball(radius=1.0),
                   Ellipsoid(semi_axes=(3.0, 2.0, 1.0))):
        scale = domain.diameter
        pts = domain.center + rng.uniform(-0.7, 0.7, (10000, 3)) * scale
        p1 = domain.nearest_boundary_point(pts)
        p2 = domain.nearest_boundary_point(p1)
        assert np.abs(p2 - p1).max() <= 1e-10 * scale
        surf, _ = domain.surface_sample(10000, make_stream(11))
        nrm = domain.outward_normal(surf)
        assert np.abs(np.linalg.norm(nrm, axis=1) - 1.0).max() <= 1e-12
        x = surf - 1e-3 * scale * nrm
        h = 1e-6 * scale
        deriv = (domain.distance_to_boundary(x - h * nrm)
                 - domain.distance_to_boundary(x + h * nrm)) / (2.0 * h)
        keep = np.ones(len(x), dtype=bool)
        if isinstance(domain, Box):
            gap = domain.half_widths - np.abs(surf - domain.center)
            gap[np.arange(len(surf)),
                np.abs(gap).argmin(axis=1)] = np.inf
            keep = gap.min(axis=1) > 1e-2 * scale
        assert np.abs(deriv[keep] - 1.0).max() <= 1e-4, type(domain).__name__


def test_criterion_09_levy_comparison(ball_long_walks):
    """The block-indicator (Levy) local time is produced on the same walks
    as the occupation estimate and its ratio to the elapsed-time census is
    reported; the discrepancy is documented, not gated."""
    occ = np.array([row["occupation"] / row["t_eps"] for row in ball_long_walks])
    lev = np.array([row["levy"] / row["t_eps"] for row in ball_long_walks])
    print(f"levy L/T mean {lev.mean():.4f} vs occupation {occ.mean():.4f} "
          f"(levy/occupation {lev.mean() / occ.mean():.4f})")
    assert np.isfinite(lev).all() and (lev > 0.0).all()


def test_lattice_walk_comparison_recorded():
    """Cheap side-by-side of the two in-layer movement rules on a small
    cube run; both errors are recorded for reference, not gated against
    each other."""
    errs = {}
    for kind in ("wos", "lattice"):
        cfg = ExperimentConfig(domain_kind="box", domain_extent=(1, 1, 1),
                               dx=0.01, k_eps=5, n_paths=2000, n_steps=2000,
                               points_kind="circle", points_count=3, rbm=kind,
                               seed=2)
        errs[kind] = run_experiment(cfg).rel_error
    print(f"movement-rule comparison errors: {errs}")
    assert all(math.isfinite(e) for e in errs.values())
