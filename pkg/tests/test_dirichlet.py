"""Absorbed walk-on-spheres tests for the Dirichlet baseline solver."""

import numpy as np
import pytest

from wosrbm import (
    DirichletProblem,
    make_stream,
    manufactured_dirichlet_data,
    solve_dirichlet,
)


def test_constant_data_reproduced_exactly(unit_ball):
    problem = DirichletProblem(domain=unit_ball,
                               boundary_values=lambda p: np.full(len(p), 2.5))
    res = solve_dirichlet(problem, (0.3, 0.1, -0.2), n_paths=256, seed=1)
    assert res.estimate == 2.5
    assert res.std == 0.0
    assert res.capped_paths == 0


def test_estimate_obeys_maximum_principle(cube2):
    problem = manufactured_dirichlet_data(cube2)
    res = solve_dirichlet(problem, (0.1, 0.0, 0.0), n_paths=2000, seed=2)
    pts, _ = cube2.surface_sample(100000, make_stream(0))
    g = problem.boundary_values(pts)
    assert g.min() <= res.estimate <= g.max()


def test_ball_center_averages_boundary_data(unit_ball):
    """u(center) is the surface mean of g; for g = x that mean is zero."""
    problem = DirichletProblem(domain=unit_ball, boundary_values=lambda p: p[:, 0])
    res = solve_dirichlet(problem, (0.0, 0.0, 0.0), n_paths=4000, seed=3)
    assert abs(res.estimate) <= 3.0 * res.stderr + 1e-3
    # std of a sphere coordinate is 1/sqrt(3)
    assert res.std == pytest.approx(1.0 / np.sqrt(3.0), rel=0.05)


def test_harmonic_solution_value(cube2):
    problem = manufactured_dirichlet_data(cube2)
    x0 = (0.4, -0.3, 0.2)
    res = solve_dirichlet(problem, x0, n_paths=4000, seed=4)
    exact = float(problem.u_exact(np.asarray(x0)))
    assert abs(res.estimate - exact) <= 3.0 * res.stderr + 2e-3


def test_step_counts_small_and_shell_dependent(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    res4 = solve_dirichlet(problem, (0.2, 0, 0), n_paths=1000, seed=5,
                           eps_abs=1e-4)
    assert res4.mean_steps < 200.0
    res8 = solve_dirichlet(problem, (0.2, 0, 0), n_paths=1000, seed=5,
                           eps_abs=1e-8)
    # halving the shell repeatedly adds O(1) steps per halving
    assert 0.0 < res8.mean_steps - res4.mean_steps < 40.0
    assert res8.eps_abs == 1e-8


def test_default_shell_scales_with_domain(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    res = solve_dirichlet(problem, (0.2, 0, 0), n_paths=16, seed=6)
    assert res.eps_abs == pytest.approx(2e-4, rel=1e-12)


def test_deterministic_and_worker_invariant(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    kw = dict(n_paths=512, seed=7, chunk_size=128)
    a = solve_dirichlet(problem, (0.5, 0, 0), **kw)
    b = solve_dirichlet(problem, (0.5, 0, 0), **kw)
    c = solve_dirichlet(problem, (0.5, 0, 0), workers=2, **kw)
    assert a.estimate == b.estimate == c.estimate
    assert a.std == c.std


def test_caps_runaway_paths(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    res = solve_dirichlet(problem, (0.5, 0, 0), n_paths=64, seed=8, max_steps=1)
    assert res.capped_paths == 64
    assert np.isfinite(res.estimate)
    assert res.max_steps == 1


def test_argument_validation(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    with pytest.raises(ValueError):
        solve_dirichlet(problem, (2.0, 0, 0), n_paths=4)
    with pytest.raises(ValueError):
        solve_dirichlet(problem, (1.0, 0, 0), n_paths=4)
    with pytest.raises(ValueError):
        solve_dirichlet(problem, (0.0, 0, 0), n_paths=0)
    with pytest.raises(ValueError):
        solve_dirichlet(problem, (0.0, 0, 0), n_paths=4, eps_abs=0.0)
    with pytest.raises(ValueError):
        solve_dirichlet(problem, np.zeros((2, 3)), n_paths=4)


def test_result_serializes(unit_ball):
    problem = manufactured_dirichlet_data(unit_ball)
    res = solve_dirichlet(problem, (0.5, 0, 0), n_paths=8, seed=9)
    d = res.to_dict()
    assert d["n_paths"] == 8
    assert d["x0"] == [0.5, 0.0, 0.0]
    assert set(d) == {"estimate", "std", "stderr", "n_paths", "mean_steps",
                      "max_steps", "capped_paths", "eps_abs", "x0",
                      "elapsed_seconds"}
