"""The 2K x 12 linear system relating broadcast positions and DOA angles.

Each DOA measurement gives two linear equations in the unknown vector
``psi = [r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3]`` obtained by
cross-multiplying the components of the measured unit vector with the
components of ``R p_A + t - p_B``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, RankDeficientWarning
from .geometry import DoaMeasurement, doa_to_unit_vector

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class MeasurementEpoch:
    """Positions and INS-frame DOA recorded at one time instant."""

    k: int
    p_a_global: np.ndarray
    p_b_local: np.ndarray
    doa_ins: DoaMeasurement

    def __post_init__(self):
        for name in ("p_a_global", "p_b_local"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class Measurements:
    """Column-oriented view of ``K`` epochs.

    ``p_a`` holds broadcaster positions in its own frame (global for
    Agent A), ``p_b`` observer positions in the observer's INS frame, and
    ``azimuth``/``elevation`` the DOA from observer to broadcaster in the
    observer's INS frame.
    """

    p_a: np.ndarray
    p_b: np.ndarray
    azimuth: np.ndarray
    elevation: np.ndarray

    def __post_init__(self):
        p_a = np.atleast_2d(np.asarray(self.p_a, dtype=float))
        p_b = np.atleast_2d(np.asarray(self.p_b, dtype=float))
        az = np.atleast_1d(np.asarray(self.azimuth, dtype=float))
        el = np.atleast_1d(np.asarray(self.elevation, dtype=float))
        k = len(az)
        if p_a.shape != (k, 3) or p_b.shape != (k, 3) or el.shape != (k,):
            raise ValueError("inconsistent measurement shapes")
        object.__setattr__(self, "p_a", p_a)
        object.__setattr__(self, "p_b", p_b)
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)

    @property
    def K(self) -> int:
        return len(self.azimuth)

    def __len__(self) -> int:
        return self.K

    def __getitem__(self, idx) -> Measurements:
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1 if idx != -1 else None)
        return Measurements(self.p_a[idx], self.p_b[idx], self.azimuth[idx], self.elevation[idx])

    def epochs(self) -> list[MeasurementEpoch]:
        return [
            MeasurementEpoch(k + 1, self.p_a[k], self.p_b[k], DoaMeasurement(float(self.azimuth[k]), float(self.elevation[k]), k=k + 1))
            for k in range(self.K)
        ]

    @classmethod
    def from_epochs(cls, epochs: Iterable[MeasurementEpoch]) -> Measurements:
        epochs = list(epochs)
        if not epochs:
            raise EmptyInputError("no measurement epochs")
        return cls(
            np.array([e.p_a_global for e in epochs]),
            np.array([e.p_b_local for e in epochs]),
            np.array([e.doa_ins.azimuth for e in epochs]),
            np.array([e.doa_ins.elevation for e in epochs]),
        )


def as_measurements(data) -> Measurements:
    if isinstance(data, Measurements):
        if data.K == 0:
            raise EmptyInputError("no measurement epochs")
        return data
    return Measurements.from_epochs(data)


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray

    @property
    def K(self) -> int:
        return self.A.shape[0] // 2


def pack_psi(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(rotation, dtype=float).reshape(9), np.asarray(translation, dtype=float).reshape(3)])


def unpack_psi(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    psi = np.asarray(psi, dtype=float)
    return psi[:9].reshape(3, 3).copy(), psi[9:12].copy()


def collinearity_rows(p_src, p_obs, azimuth, elevation):
    """Rows for ``K`` observations, as arrays ``(2K, 12)`` and ``(2K,)``.

    ``p_src`` are the broadcaster positions in the frame the unknown
    rotation maps from, ``p_obs`` the observer positions in the frame it
    maps to.  Row ``2k`` pairs DOA components (x, z), row ``2k+1`` (y, z).
    """
    p_src = np.atleast_2d(np.asarray(p_src, dtype=float))
    p_obs = np.atleast_2d(np.asarray(p_obs, dtype=float))
    q = np.atleast_2d(doa_to_unit_vector(azimuth, elevation))
    k = len(q)
    q1, q2, q3 = q[:, 0], q[:, 1], q[:, 2]

    A = np.zeros((2 * k, 12))
    b = np.empty(2 * k)
    odd, even = A[0::2], A[1::2]
    odd[:, 0:3] = p_src * q3[:, None]
    odd[:, 6:9] = -p_src * q1[:, None]
    odd[:, 9] = q3
    odd[:, 11] = -q1
    even[:, 3:6] = p_src * q3[:, None]
    even[:, 6:9] = -p_src * q2[:, None]
    even[:, 10] = q3
    even[:, 11] = -q2
    b[0::2] = -q1 * p_obs[:, 2] + q3 * p_obs[:, 0]
    b[1::2] = -q2 * p_obs[:, 2] + q3 * p_obs[:, 1]
    return A, b


def build_rows(epoch: MeasurementEpoch):
    """The two rows of ``A`` and entries of ``b`` contributed by one epoch."""
    A, b = collinearity_rows(epoch.p_a_global, epoch.p_b_local, epoch.doa_ins.azimuth, epoch.doa_ins.elevation)
    return (A[0], A[1]), (float(b[0]), float(b[1]))


def assemble(data: Measurements | Sequence[MeasurementEpoch]) -> LinearSystem:
    m = as_measurements(data)
    A, b = collinearity_rows(m.p_a, m.p_b, m.azimuth, m.elevation)
    return LinearSystem(A, b)


@dataclass(frozen=True)
class LsSolution:
    psi: np.ndarray
    residual_norm: float
    rank: int
    singular_values: np.ndarray

    @property
    def rank_deficient(self) -> bool:
        return self.rank < len(self.psi)

    @property
    def rotation(self) -> np.ndarray:
        return unpack_psi(self.psi)[0]

    @property
    def translation(self) -> np.ndarray:
        return unpack_psi(self.psi)[1]


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def solve_ls(system: LinearSystem, rtol: float = RANK_RTOL) -> LsSolution:
    """Minimum-norm least-squares solution of ``A psi = b`` via SVD.

    A :class:`RankDeficientWarning` is issued when fewer than ``n`` singular
    values exceed ``rtol * s_max``; the minimum-norm solution is still
    returned and ``rank_deficient`` is set.
    """
    A, b = system.A, system.b
    n = A.shape[1]
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    rank = int(np.sum(keep))
    psi = vt[keep].T @ ((u[:, keep].T @ b) / s[keep])
    resid = float(np.linalg.norm(A @ psi - b))
    if rank < n:
        warnings.warn(
            f"linear system has rank {rank} < {n}; trajectory unsuitable for the linear method",
            RankDeficientWarning,
            stacklevel=2,
        )
    full_s = np.zeros(n)
    full_s[: s.size] = s
    return LsSolution(psi, resid, rank, full_s)
