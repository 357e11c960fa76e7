"""Lattice-walk sampler tests: moves, grid snapping, endpoint time law."""

import json

import numpy as np
import pytest

from wosrbm import (
    Ball,
    appendix_time_law_check,
    lattice_step,
    make_stream,
    snap_to_grid,
)
from wosrbm.lattice import MOVES, _moves_from_directions, lattice_walk_steps
from wosrbm.rbm import walk_steps
from wosrbm.sampling import unit_sphere_sample


def test_move_table():
    assert MOVES.shape == (6, 3)
    assert np.array_equal(np.abs(MOVES).sum(axis=1), np.ones(6))
    assert np.array_equal(MOVES.sum(axis=0), np.zeros(3))


def test_lattice_step_geometry():
    rng = make_stream(61)
    h = 0.25
    x = np.zeros((1000, 3))
    y = lattice_step(x, h, rng)
    d = y - x
    assert np.array_equal(np.sort(np.abs(d), axis=1)[:, :2], np.zeros((1000, 2)))
    assert np.array_equal(np.abs(d).max(axis=1), np.full(1000, h))
    single = lattice_step((0.0, 0.0, 0.0), h, rng)
    assert single.shape == (3,)


def test_lattice_step_move_frequencies():
    rng = make_stream(63)
    y = lattice_step(np.zeros((600000, 3)), 1.0, rng)
    for m in MOVES:
        freq = (y == m).all(axis=1).mean()
        assert abs(freq - 1.0 / 6.0) <= 0.005


def test_directions_map_uniformly_to_moves():
    u = unit_sphere_sample(make_stream(67), 600000)
    mv = _moves_from_directions(u, 1.0)
    for m in MOVES:
        freq = (mv == m).all(axis=1).mean()
        assert abs(freq - 1.0 / 6.0) <= 0.005


def test_two_step_return_probability():
    rng = make_stream(69)
    n = 600000
    x1 = lattice_step(np.zeros((n, 3)), 1.0, rng)
    x2 = lattice_step(x1, 1.0, rng)
    back = (x2 == 0.0).all(axis=1).mean()
    assert abs(back - 1.0 / 6.0) <= 0.005


# ------------------------------------------------------------ grid snapping

def test_snap_to_grid_nearest(cube2):
    h = 0.25
    assert np.allclose(snap_to_grid(cube2, np.array([0.26, 0.0, 0.0]), h),
                       (0.25, 0.0, 0.0), atol=1e-15)
    got = snap_to_grid(cube2, np.array([[0.26, -0.1, 0.55], [0.0, 0.74, 0.0]]), h)
    assert np.allclose(got, [[0.25, 0.0, 0.5], [0.0, 0.75, 0.0]], atol=1e-15)


def test_snap_to_grid_tie_break(cube2):
    h = 0.25
    # exactly between 0 and +h: the lexicographically smaller offset wins
    assert np.allclose(snap_to_grid(cube2, np.array([0.125, 0.0, 0.0]), h),
                       (0.0, 0.0, 0.0), atol=1e-15)
    # exactly between -h and 0: likewise
    assert np.allclose(snap_to_grid(cube2, np.array([-0.125, 0.0, 0.0]), h),
                       (-0.25, 0.0, 0.0), atol=1e-15)


def test_snap_to_grid_respects_domain():
    ball = Ball(radius=0.05)
    got = snap_to_grid(ball, np.array([0.04, 0.0, 0.0]), 1.0)
    assert np.array_equal(got, (0.0, 0.0, 0.0))
    # a query whose 27-cell neighborhood holds no in-domain grid point
    with pytest.raises(RuntimeError):
        snap_to_grid(ball, np.array([5.2, 0.0, 0.0]), 1.0)


# ------------------------------------------------------------- lattice walk

def test_lattice_walk_stream_properties(unit_ball):
    dx, k, n = 0.02, 5, 400
    eps = k * dx
    seen_layer = seen_interior = False
    hits = 0
    for sb in lattice_walk_steps(unit_ball, (0.9, 0, 0), dx, k, n,
                                 make_stream(71), n_paths=2):
        assert unit_ball.contains(sb.x).all()
        layer = sb.in_eps
        assert np.array_equal(sb.r, np.where(layer, dx, sb.d_pre))
        seen_layer |= bool(layer.any())
        seen_interior |= bool((~layer).any())
        hits += sb.hit_idx.size
        if sb.hit_idx.size:
            d_hit = unit_ball.distance_to_boundary(sb.hit_points)
            assert d_hit.max() <= unit_ball.boundary_tolerance
        # any position inside the layer continues from a lattice point
        in_layer_now = sb.d <= eps
        if in_layer_now.any():
            cells = (sb.x[in_layer_now] - unit_ball.center) / dx
            assert np.abs(cells - np.round(cells)).max() <= 1e-9
    assert seen_layer and seen_interior and hits > 0


def test_lattice_walk_consumes_stream_like_wos(unit_ball):
    """Both samplers draw one direction per path per step."""
    r1, r2 = make_stream(73), make_stream(73)
    for _ in lattice_walk_steps(unit_ball, (0.5, 0, 0), 0.02, 5, 70, r1, 3):
        pass
    for _ in walk_steps(unit_ball, (0.5, 0, 0), 0.02, 5, 70, r2, 3):
        pass
    assert np.array_equal(r1.standard_normal(5), r2.standard_normal(5))


def test_lattice_walk_deterministic(unit_ball):
    a = [sb.x.copy() for sb in lattice_walk_steps(
        unit_ball, (0.9, 0, 0), 0.02, 5, 60, make_stream(77))]
    b = [sb.x.copy() for sb in lattice_walk_steps(
        unit_ball, (0.9, 0, 0), 0.02, 5, 60, make_stream(77))]
    assert np.array_equal(np.array(a), np.array(b))


# ----------------------------------------------------------- endpoint law

def test_appendix_time_law_moments():
    rep = appendix_time_law_check(n_steps=10000, h=0.01, samples=100000, seed=0)
    want = 10000 * 0.01**2 / 3.0
    assert rep.expected_variance == pytest.approx(want, rel=1e-15)
    assert np.abs(rep.variances / want - 1.0).max() <= 0.02
    assert (np.abs(rep.covariances) <= 3.0 * rep.covariance_stderr).all()
    assert np.abs(rep.excess_kurtosis).max() <= 0.05
    assert rep.kurtosis_stderr == pytest.approx(np.sqrt(24.0 / 100000), rel=1e-15)


def test_appendix_time_law_single_step():
    rep = appendix_time_law_check(n_steps=1, h=0.5, samples=20000, seed=1)
    assert np.abs(rep.variances / rep.expected_variance - 1.0).max() <= 0.1


def test_time_law_report_serializes():
    rep = appendix_time_law_check(n_steps=100, h=0.1, samples=1000, seed=2)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["n_steps"] == 100 and d["samples"] == 1000
    assert len(d["variances"]) == 3 and len(d["covariances"]) == 3
