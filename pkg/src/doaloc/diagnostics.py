"""Detection of trajectory geometries that leave the pose under-determined."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .geometry import doa_to_unit_vector
from .linear_system import Measurements, as_measurements, assemble, numerical_rank

SHAPE_RTOL = 1e-6
PARALLEL_ANGLE = 1e-6


class Flag(enum.Enum):
    PLANAR_A = "PlanarA"
    COLLINEAR_A = "CollinearA"
    PARALLEL_DOA = "ParallelDoa"


CONSEQUENCES = {
    Flag.PLANAR_A: "broadcaster moves in a plane: the linear system is rank deficient",
    Flag.COLLINEAR_A: "broadcaster moves on a line: rotation about that line is unobservable",
    Flag.PARALLEL_DOA: "all DOA vectors are parallel: range along the DOA is unobservable",
}


@dataclass(frozen=True)
class Diagnostics:
    flags: frozenset[Flag]
    singular_values: np.ndarray
    max_doa_angle: float
    ls_rank: int
    messages: list[str] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)

    def to_dict(self) -> dict:
        return {
            "flags": sorted(f.value for f in self.flags),
            "messages": list(self.messages),
            "broadcaster_spread_singular_values": self.singular_values.tolist(),
            "max_pairwise_doa_angle_rad": self.max_doa_angle,
            "linear_system_rank": self.ls_rank,
        }


def max_pairwise_angle(u: np.ndarray) -> float:
    """Largest angle between any two unit vectors in ``u`` ``(K, 3)``."""
    if len(u) < 2:
        return 0.0
    cross = np.linalg.norm(np.cross(u[:, None, :], u[None, :, :]), axis=-1)
    dot = np.einsum("id,jd->ij", u, u)
    return float(np.max(np.arctan2(cross, dot)))


def detect_unsuitable(data) -> Diagnostics:
    """Flag planar or collinear broadcaster motion and parallel DOA.

    Shape flags compare singular values of the centred broadcaster
    positions with ``1e-6`` times the largest; the DOA flag fires when every
    pair of INS-frame DOA vectors is within ``1e-6`` rad.  Thresholds are
    meant for noiseless geometry.
    """
    m: Measurements = as_measurements(data)
    if m.K < 2:
        raise ValueError("at least two epochs are needed for diagnostics")
    centred = m.p_a - m.p_a.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    s = np.concatenate([s, np.zeros(3 - len(s))])
    flags = set()
    spread = s[0]
    if spread == 0.0 or s[1] <= SHAPE_RTOL * spread:
        flags.add(Flag.COLLINEAR_A)
    if spread == 0.0 or s[2] <= SHAPE_RTOL * spread:
        flags.add(Flag.PLANAR_A)
    ang = max_pairwise_angle(doa_to_unit_vector(m.azimuth, m.elevation).reshape(-1, 3))
    if ang < PARALLEL_ANGLE:
        flags.add(Flag.PARALLEL_DOA)
    rank = numerical_rank(assemble(m).A)
    msgs = [f"{f.value}: {CONSEQUENCES[f]}" for f in Flag if f in flags]
    return Diagnostics(frozenset(flags), s, ang, rank, msgs)
