"""Seeded random streams and uniform sphere-surface sampling.

Streams are derived from a master seed plus integer stream ids through
numpy's SeedSequence, which is splittable and collision-resistant: the same
(seed, ids) always yields the identical sequence, and distinct id tuples
yield statistically independent ones.  One caveat: SeedSequence ignores
trailing zero entropy words, so (seed, 3) and (seed, 3, 0) are the same
stream; callers that need disjoint families should keep the id arity fixed.
"""

from __future__ import annotations

import numpy as np


def make_stream(seed: int, *stream_id: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *stream_id)."""
    for v in (seed, *stream_id):
        if int(v) != v or v < 0:
            raise ValueError("seed and stream ids must be nonnegative integers")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream_id)]))


def unit_sphere_sample(rng: np.random.Generator, shape=None) -> np.ndarray:
    """Uniform points on the unit sphere, shape (*shape, 3) or (3,) if None.

    Normalized standard normals; degenerate draws with vanishing norm are
    resampled (probability ~1e-300 per draw, so the loop effectively never
    runs, but the contract is explicit).
    """
    single = shape is None
    shape = (1,) if single else tuple(np.atleast_1d(shape))
    v = rng.standard_normal(shape + (3,))
    n2 = (v * v).sum(axis=-1)
    while True:
        bad = n2 < 1e-300
        if not bad.any():
            break
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        n2[bad] = (v[bad] * v[bad]).sum(axis=-1)
    v /= np.sqrt(n2)[..., None]
    return v[0] if single else v


def wos_jump(x, r, rng: np.random.Generator) -> np.ndarray:
    """One walk-on-spheres jump: x plus r times a uniform sphere direction."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape == (3,):
        return x + float(r) * unit_sphere_sample(rng)
    r = np.asarray(r, dtype=np.float64)
    return x + r[:, None] * unit_sphere_sample(rng, x.shape[0])
