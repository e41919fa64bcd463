"""Small fixtures-by-function shared across test modules."""

import numpy as np

from doaloc.geometry import unit_vector_to_doa
from doaloc.linear_system import Measurements
from doaloc.scenario import generate_scenario


def random_instance(K: int, rng: np.random.Generator, noise: float = 0.0):
    """Generic exact (or noisy) measurements for a random pose; returns (m, R, t)."""
    from scipy.spatial.transform import Rotation

    R = Rotation.random(random_state=rng).as_matrix()
    t = rng.uniform(-500, 500, 3)
    p_a = rng.uniform(-1000, 1000, (K, 3))
    p_b = rng.uniform(-1000, 1000, (K, 3))
    az, el = unit_vector_to_doa(p_a @ R.T + t - p_b)
    az = az + noise * rng.standard_normal(K)
    el = el + noise * rng.standard_normal(K)
    return Measurements(p_a, p_b, az, el), R, t


def synthetic(K: int, seed: int, **kw):
    return generate_scenario(K, seed=seed, **kw)
