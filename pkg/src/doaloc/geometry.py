"""Frames, rotations, poses and direction-of-arrival conversions.

Conventions
-----------
* A pose maps coordinates of ``from_frame`` into ``to_frame``:
  ``p_to = R @ p_from + t``.
* Azimuth is measured from +x towards +y in the xy plane, elevation is
  positive towards +z.  Both are radians.
* Euler angles are intrinsic Z-Y-X (yaw, pitch, roll):
  ``R = Rz(alpha) @ Ry(beta) @ Rx(gamma)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVectorError

EPS_LEN = 1e-9
EPS_ROT = 1e-9


class FrameKind(enum.Enum):
    GLOBAL = "global"  # A1
    LOCAL_INS = "local_ins"  # B2 / C2
    BODY_CENTRED_INS = "body_centred_ins"  # B3, axes parallel to B2
    BODY_FIXED = "body_fixed"  # B4


@dataclass(frozen=True)
class FrameId:
    kind: FrameKind
    agent: str

    def __str__(self) -> str:
        index = {
            FrameKind.GLOBAL: 1,
            FrameKind.LOCAL_INS: 2,
            FrameKind.BODY_CENTRED_INS: 3,
            FrameKind.BODY_FIXED: 4,
        }[self.kind]
        return f"{self.agent}{index}"

    def axes_parallel_to(self, other: FrameId) -> bool:
        """True when both frames share axis directions by definition."""
        if self == other:
            return True
        ins = {FrameKind.LOCAL_INS, FrameKind.BODY_CENTRED_INS}
        return self.agent == other.agent and {self.kind, other.kind} <= ins


GLOBAL = FrameId(FrameKind.GLOBAL, "A")


def local_ins(agent: str) -> FrameId:
    return FrameId(FrameKind.LOCAL_INS, agent)


def body_fixed(agent: str) -> FrameId:
    return FrameId(FrameKind.BODY_FIXED, agent)


# --------------------------------------------------------------------------
# rotations


def is_rotation(m: np.ndarray, tol: float = EPS_ROT) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    orth = np.max(np.abs(m @ m.T - np.eye(3))) <= tol
    return bool(orth and abs(np.linalg.det(m) - 1.0) <= tol)


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(angles) -> np.ndarray:
    """Rotation matrix from intrinsic Z-Y-X angles ``(alpha, beta, gamma)``."""
    alpha, beta, gamma = angles
    return rot_z(alpha) @ rot_y(beta) @ rot_x(gamma)


def euler_jacobians(angles) -> np.ndarray:
    """Partial derivatives of :func:`euler_to_rotation`, shape ``(3, 3, 3)``.

    ``out[j]`` is ``dR/d angles[j]``.
    """
    alpha, beta, gamma = angles
    rz, ry, rx = rot_z(alpha), rot_y(beta), rot_x(gamma)
    # d/da of a rotation about an axis is generator @ rotation
    gz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    gy = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    gx = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    return np.stack([gz @ rz @ ry @ rx, rz @ gy @ ry @ rx, rz @ ry @ gx @ rx])


def rotation_to_euler(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`euler_to_rotation`.

    At gimbal lock (``|beta| = pi/2``) roll is set to zero and the
    remaining freedom is put in yaw.
    """
    m = np.asarray(m, dtype=float)
    sb = -m[2, 0]
    cb = np.hypot(m[0, 0], m[1, 0])
    beta = np.arctan2(sb, cb)
    if cb > 1e-12:
        alpha = np.arctan2(m[1, 0], m[0, 0])
        gamma = np.arctan2(m[2, 1], m[2, 2])
    else:
        alpha = np.arctan2(-m[0, 1], m[1, 1])
        gamma = 0.0
    return np.array([alpha, beta, gamma])


@dataclass(frozen=True)
class EulerAngles:
    alpha: float
    beta: float
    gamma: float

    @classmethod
    def from_rotation(cls, m: np.ndarray) -> EulerAngles:
        return cls(*(float(a) for a in rotation_to_euler(m)))

    def to_rotation(self) -> np.ndarray:
        return euler_to_rotation((self.alpha, self.beta, self.gamma))

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])


# --------------------------------------------------------------------------
# poses


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``p_to = rotation @ p_from + translation``."""

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: FrameId | None = None
    to_frame: FrameId | None = None

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls, from_frame=None, to_frame=None) -> Pose:
        return cls(np.eye(3), np.zeros(3), from_frame, to_frame)

    def inverse(self) -> Pose:
        return invert_pose(self)

    def apply(self, p: np.ndarray) -> np.ndarray:
        return transform_point(p, self)

    def compose(self, inner: Pose) -> Pose:
        """Pose equivalent to applying ``inner`` first, then ``self``."""
        return Pose(
            self.rotation @ inner.rotation,
            self.rotation @ inner.translation + self.translation,
            inner.from_frame,
            self.to_frame,
        )


def transform_point(p: np.ndarray, pose: Pose) -> np.ndarray:
    """Apply ``pose`` to one point ``(3,)`` or a stack of points ``(K, 3)``."""
    p = np.asarray(p, dtype=float)
    return p @ pose.rotation.T + pose.translation


def invert_pose(pose: Pose) -> Pose:
    rt = pose.rotation.T
    return Pose(rt, -rt @ pose.translation, pose.to_frame, pose.from_frame)


# --------------------------------------------------------------------------
# direction of arrival


def wrap_angle(a):
    """Wrap angles into ``(-pi, pi]``."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return w if w.ndim else float(w)


def doa_to_unit_vector(azimuth, elevation) -> np.ndarray:
    """Unit vector(s) ``[cos az cos el, sin az cos el, sin el]``.

    Broadcasts over array inputs; the last axis of the result has length 3.
    """
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    ce = np.cos(el)
    return np.stack([np.cos(az) * ce, np.sin(az) * ce, np.sin(el)], axis=-1)


def unit_vector_to_doa(v, eps: float = EPS_LEN):
    """Azimuth and elevation of vector(s) ``v`` (need not be unit length).

    Returns ``(azimuth, elevation)``; scalars for a single vector.  At the
    poles the azimuth is zero.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1)
    if np.any(norm <= eps):
        raise DegenerateVectorError(f"vector length {np.min(norm):.3g} is below {eps:g}")
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.hypot(x, y)
    az = np.where(rho > 0.0, np.arctan2(y, x), 0.0)
    az = np.where(az == -np.pi, np.pi, az)
    el = np.arctan2(z, rho)
    if v.ndim == 1:
        return float(az), float(el)
    return az, el


@dataclass(frozen=True)
class DoaMeasurement:
    azimuth: float
    elevation: float
    frame: FrameId | None = None
    k: int | None = None

    def __post_init__(self):
        if not (-np.pi < self.azimuth <= np.pi):
            raise ValueError(f"azimuth {self.azimuth} outside (-pi, pi]")
        if not (-np.pi / 2 <= self.elevation <= np.pi / 2):
            raise ValueError(f"elevation {self.elevation} outside [-pi/2, pi/2]")

    @classmethod
    def from_vector(cls, v, frame: FrameId | None = None, k: int | None = None) -> DoaMeasurement:
        az, el = unit_vector_to_doa(v)
        return cls(az, el, frame, k)

    def unit_vector(self) -> np.ndarray:
        return doa_to_unit_vector(self.azimuth, self.elevation)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


__all__ = [
    "EPS_LEN",
    "EPS_ROT",
    "FrameKind",
    "FrameId",
    "GLOBAL",
    "local_ins",
    "body_fixed",
    "is_rotation",
    "rot_x",
    "rot_y",
    "rot_z",
    "euler_to_rotation",
    "euler_jacobians",
    "rotation_to_euler",
    "EulerAngles",
    "Pose",
    "transform_point",
    "invert_pose",
    "wrap_angle",
    "doa_to_unit_vector",
    "unit_vector_to_doa",
    "DoaMeasurement",
    "random_rotation",
]
