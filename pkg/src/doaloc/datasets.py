"""Bundled recorded-flight example: six epochs of positions and DOA."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import GLOBAL, Pose, local_ins
from .io import read_measurement_csv
from .linear_system import Measurements
from .procrustes import closest_rotation
from .scenario import Scenario, from_positions

# recorded drift, rounded to three decimals, hence not exactly orthogonal
R_RECORDED = np.array(
    [
        [1.000, -0.032, 3.78e-5],
        [0.032, 1.000, 0.002],
        [-9.48e-5, -0.002, 1.000],
    ]
)
T_RECORDED = np.array([854.87, 6.18, 1.93])

# recorded SDP+O+ML reconstruction of the observer's global track
RECONSTRUCTED_REFERENCE = np.array(
    [
        [135.9, 468.16, 276.2],
        [583.6, 426.3, 297.9],
        [1044.8, 378.6, 319.9],
        [1230.3, 672.8, 330.6],
        [1279.0, 1093.9, 334.7],
        [1101.3, 1400.2, 329.2],
    ]
)


@dataclass(frozen=True)
class RecordedFlight:
    measurements: Measurements
    p_b_global: np.ndarray

    @property
    def rotation(self) -> np.ndarray:
        """Recorded rotation projected onto SO(3)."""
        return closest_rotation(R_RECORDED)

    @property
    def pose(self) -> Pose:
        return Pose(self.rotation, T_RECORDED, GLOBAL, local_ins("B"))

    def replay(self, sigma=(0.0, 0.0), seed: int | None = None) -> Scenario:
        """Scenario built on the recorded tracks with body axes parallel to INS axes.

        The observer's global track is recomputed from its INS positions and
        the projected pose so the noiseless DOA are exactly consistent;
        noise (radians) is drawn from ``seed``.
        """
        pose = self.pose
        p_b_global = pose.inverse().apply(self.measurements.p_b)
        return from_positions(self.measurements.p_a, p_b_global, pose, sigma=sigma, seed=seed)


def table1_path():
    return resources.files("doaloc").joinpath("data/table1.csv")


def load_table1() -> RecordedFlight:
    with resources.as_file(table1_path()) as p:
        tab = read_measurement_csv(p)
    return RecordedFlight(tab.measurements, tab.p_b_global)
