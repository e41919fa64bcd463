"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
seeds = st.integers(0, 2**32 - 1)
rotations = seeds.map(lambda s: Rotation.random(random_state=s).as_matrix())
azimuths = st.floats(-np.pi, np.pi, exclude_min=True)
elevations = st.floats(-np.pi / 2 + 1e-6, np.pi / 2 - 1e-6)
