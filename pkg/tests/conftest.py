"""Shared fixtures and builders for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wosrbm import Ball, Box, Ellipsoid, RbmPath
from wosrbm.rbm import region_codes

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def cube2() -> Box:
    """Axis-aligned cube of size 2 centered at the origin."""
    return Box(half_widths=(1.0, 1.0, 1.0))


@pytest.fixture
def unit_ball() -> Ball:
    return Ball(radius=1.0)


@pytest.fixture
def ellipsoid321() -> Ellipsoid:
    return Ellipsoid(semi_axes=(3.0, 2.0, 1.0))


def synthetic_path(dx, k_eps, radii, distances, hits=None) -> RbmPath:
    """RbmPath with prescribed per-step radii and pre-move boundary distances.

    hits maps 1-based step indices to boundary hit points.  Positions are
    placeholders; only the fields consumed by the local-time and
    contribution kernels are meaningful.
    """
    radii = np.asarray(radii, dtype=np.float64)
    distances = np.asarray(distances, dtype=np.float64)
    n = radii.shape[0]
    if distances.shape != (n,):
        raise ValueError("radii and distances must have equal length")
    eps = k_eps * dx
    in_eps = distances <= eps
    hit_mask = np.zeros(n, dtype=bool)
    hit_points = np.full((n, 3), np.nan)
    for step, p in (hits or {}).items():
        hit_mask[step - 1] = True
        hit_points[step - 1] = np.asarray(p, dtype=np.float64)
    return RbmPath(
        x0=np.zeros(3), dx=float(dx), k_eps=int(k_eps), n_steps=n,
        positions=np.zeros((n, 3)), radii=radii, distances=distances,
        regions=region_codes(distances, dx, eps, 1e-12 * max(1.0, eps)),
        in_eps=in_eps, hit_mask=hit_mask, hit_points=hit_points)


def layer_path(dx, k_eps, n_steps, hits=None) -> RbmPath:
    """Path of n_steps fixed-radius layer steps whose spheres sit fully
    inside the layer, so every step carries one full step-duration of
    occupation."""
    d_mid = 0.5 * k_eps * dx  # in [dx, eps - dx] for any k_eps >= 3
    if not (dx <= d_mid <= (k_eps - 1) * dx):
        raise ValueError("k_eps too small for a fully interior layer sphere")
    return synthetic_path(dx, k_eps, np.full(n_steps, dx),
                          np.full(n_steps, d_mid), hits)
