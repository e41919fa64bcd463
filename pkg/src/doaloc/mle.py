"""Maximum-likelihood refinement of a frame-alignment estimate.

The refinement works with DOA angles measured in the observer's body-fixed
frame, where azimuth and elevation errors are independent Gaussians with
known standard deviations.  The negative log-likelihood

    sum_k (az_meas - az(k; R, t))^2 / (2 s_az^2)
        + (el_meas - el(k; R, t))^2 / (2 s_el^2)

is minimised by gradient descent with a backtracking (Armijo) line search
over Z-Y-X Euler angles of ``R`` and the translation ``t``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GimbalLockWarning
from .geometry import (
    euler_jacobians,
    euler_to_rotation,
    rotation_to_euler,
    unit_vector_to_doa,
    wrap_angle,
)

GIMBAL_MARGIN = 1e-3


@dataclass(frozen=True)
class NoiseModel:
    """Standard deviations (radians) of body-frame azimuth and elevation errors."""

    sigma_azimuth: float
    sigma_elevation: float

    def __post_init__(self):
        if not (self.sigma_azimuth > 0 and self.sigma_elevation > 0):
            raise ValueError("noise standard deviations must be positive")

    @classmethod
    def from_degrees(cls, sigma_az_deg: float, sigma_el_deg: float) -> NoiseModel:
        return cls(np.deg2rad(sigma_az_deg), np.deg2rad(sigma_el_deg))


@dataclass(frozen=True)
class AttitudeLog:
    """Per-epoch transforms from the observer's INS frame to its body frame.

    ``rotations[k]`` is the body attitude relative to the INS axes and
    ``translations[k] = -rotations[k] @ p_obs[k]`` puts the body-frame
    origin on the observer.
    """

    rotations: np.ndarray
    translations: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotations, dtype=float).reshape(-1, 3, 3)
        t = np.asarray(self.translations, dtype=float).reshape(-1, 3)
        if len(r) != len(t):
            raise ValueError("one attitude entry per epoch required")
        object.__setattr__(self, "rotations", r)
        object.__setattr__(self, "translations", t)

    def __len__(self) -> int:
        return len(self.rotations)

    @classmethod
    def from_rotations(cls, rotations, p_obs) -> AttitudeLog:
        rotations = np.asarray(rotations, dtype=float)
        p_obs = np.asarray(p_obs, dtype=float)
        return cls(rotations, -np.einsum("kij,kj->ki", rotations, p_obs))

    @classmethod
    def identity(cls, p_obs) -> AttitudeLog:
        p_obs = np.atleast_2d(np.asarray(p_obs, dtype=float))
        return cls.from_rotations(np.broadcast_to(np.eye(3), (len(p_obs), 3, 3)), p_obs)

    def to_body(self, v_ins: np.ndarray) -> np.ndarray:
        """Rotate direction vectors ``(K, 3)`` from INS axes to body axes."""
        return np.einsum("kij,kj->ki", self.rotations, v_ins)

    def to_ins(self, v_body: np.ndarray) -> np.ndarray:
        return np.einsum("kji,kj->ki", self.rotations, v_body)


@dataclass(frozen=True)
class BodyObservations:
    """Broadcaster positions with the body-frame DOA the observer measured."""

    p_src: np.ndarray
    azimuth: np.ndarray
    elevation: np.ndarray
    attitudes: AttitudeLog

    def __post_init__(self):
        object.__setattr__(self, "p_src", np.atleast_2d(np.asarray(self.p_src, dtype=float)))
        object.__setattr__(self, "azimuth", np.atleast_1d(np.asarray(self.azimuth, dtype=float)))
        object.__setattr__(self, "elevation", np.atleast_1d(np.asarray(self.elevation, dtype=float)))
        if not (len(self.p_src) == len(self.azimuth) == len(self.elevation) == len(self.attitudes)):
            raise ValueError("inconsistent observation lengths")

    @property
    def K(self) -> int:
        return len(self.azimuth)


def predict_body_vectors(R, t, obs: BodyObservations) -> np.ndarray:
    """Broadcaster positions in the observer body frame under pose ``(R, t)``."""
    v = obs.p_src @ np.asarray(R).T + np.asarray(t)
    return obs.attitudes.to_body(v) + obs.attitudes.translations


def predict_body_doa(R, t, obs: BodyObservations):
    """Predicted body-frame ``(azimuth, elevation)`` arrays for every epoch."""
    return unit_vector_to_doa(predict_body_vectors(R, t, obs).reshape(-1, 3))


def residuals(R, t, obs: BodyObservations):
    az, el = predict_body_doa(R, t, obs)
    return wrap_angle(obs.azimuth - az), wrap_angle(obs.elevation - el)


def negative_log_likelihood(R, t, obs: BodyObservations, noise: NoiseModel) -> float:
    ra, re = residuals(R, t, obs)
    return float(np.sum(ra**2) / (2 * noise.sigma_azimuth**2) + np.sum(re**2) / (2 * noise.sigma_elevation**2))


# --------------------------------------------------------------------------
# 6-parameter objective


def params_to_pose(params, anchor=None):
    R = euler_to_rotation(params[:3])
    if anchor is not None:
        R = anchor @ R
    return R, np.asarray(params[3:6], dtype=float)


def nll_from_params(params, obs: BodyObservations, noise: NoiseModel, anchor=None) -> float:
    R, t = params_to_pose(params, anchor)
    return negative_log_likelihood(R, t, obs, noise)


def _angle_jacobian(params, obs: BodyObservations, anchor=None):
    """Residuals and Jacobian ``(2K, 6)`` of predicted ``[az; el]``."""
    params = np.asarray(params, dtype=float)
    R, t = params_to_pose(params, anchor)
    p = predict_body_vectors(R, t, obs)
    px, py, pz = p[:, 0], p[:, 1], p[:, 2]
    rho2 = px**2 + py**2
    rho = np.sqrt(rho2)
    r2 = rho2 + pz**2
    az, el = unit_vector_to_doa(p)
    res = np.concatenate([wrap_angle(obs.azimuth - az), wrap_angle(obs.elevation - el)])

    d_az = np.column_stack([-py / rho2, px / rho2, np.zeros_like(px)])
    d_el = np.column_stack([-pz * px / (r2 * rho), -pz * py / (r2 * rho), rho / r2])
    # pull the body-frame derivatives back to INS axes: d(angle)/dt
    d_t = np.vstack([obs.attitudes.to_ins(d_az), obs.attitudes.to_ins(d_el)])

    jac = euler_jacobians(params[:3])
    if anchor is not None:
        jac = anchor @ jac
    dp = np.einsum("jab,kb->kja", jac, obs.p_src)  # (K, 3 angles, 3)
    dp = np.concatenate([dp, dp])
    d_ang = np.einsum("ka,kja->kj", d_t, dp)
    return res, np.hstack([d_ang, d_t])


def _weights(noise: NoiseModel, K: int) -> np.ndarray:
    return np.concatenate([np.full(K, noise.sigma_azimuth**-2), np.full(K, noise.sigma_elevation**-2)])


def gradient(params, obs: BodyObservations, noise: NoiseModel, anchor=None) -> np.ndarray:
    """Analytic gradient of the NLL with respect to ``[euler(3), t(3)]``."""
    res, J = _angle_jacobian(params, obs, anchor)
    return -J.T @ (_weights(noise, obs.K) * res)


def fisher_information(params, obs: BodyObservations, noise: NoiseModel, anchor=None) -> np.ndarray:
    """Gauss-Newton approximation ``J^T W J`` of the NLL Hessian."""
    _, J = _angle_jacobian(params, obs, anchor)
    return J.T @ (_weights(noise, obs.K)[:, None] * J)


def numerical_gradient(params, obs: BodyObservations, noise: NoiseModel, anchor=None, h_ang=1e-6, h_t=1e-4) -> np.ndarray:
    """Central finite differences with per-coordinate steps."""
    params = np.asarray(params, dtype=float)
    g = np.empty(6)
    for j in range(6):
        h = h_ang if j < 3 else h_t
        e = np.zeros(6)
        e[j] = h
        g[j] = (nll_from_params(params + e, obs, noise, anchor) - nll_from_params(params - e, obs, noise, anchor)) / (2 * h)
    return g


# --------------------------------------------------------------------------
# descent


@dataclass(frozen=True)
class MleOptions:
    max_iter: int = 500
    grad_tol: float = 1e-7
    rel_tol: float = 1e-10
    window: int = 5
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60
    preconditioner: str = "fisher"  # or "diagonal"


@dataclass(frozen=True)
class MlState:
    iteration: int
    params: np.ndarray
    nll: float
    gradient_norm: float
    rotation_error: float | None = None
    position_error: float | None = None


@dataclass
class MleResult:
    rotation: np.ndarray
    translation: np.ndarray
    trace: list[MlState] = field(default_factory=list)
    reason: str = ""
    anchor: np.ndarray = field(default_factory=lambda: np.eye(3))

    @property
    def iterations(self) -> int:
        return self.trace[-1].iteration if self.trace else 0

    @property
    def nll(self) -> np.ndarray:
        return np.array([s.nll for s in self.trace])


def refine(
    R0,
    t0,
    obs: BodyObservations,
    noise: NoiseModel,
    opts: MleOptions | None = None,
    truth=None,
) -> MleResult:
    """Gradient descent on the NLL starting from ``(R0, t0)``.

    Each step moves along a preconditioned negative gradient ``-M^-1 g`` and
    its length is chosen by Armijo backtracking.  With the default
    ``"fisher"`` preconditioner ``M`` is the Gauss-Newton matrix
    ``J^T W J`` re-evaluated at every iterate (eigenvalues floored so ``M``
    stays positive definite); ``"diagonal"`` uses a fixed scaling by the
    noise level and the mean range.  ``truth`` is an optional callable
    mapping ``(R, t)`` to ``(rotation_error, position_error)`` recorded in
    the trace.
    """
    opts = opts or MleOptions()
    if opts.preconditioner not in ("fisher", "diagonal"):
        raise ValueError(f"unknown preconditioner {opts.preconditioner!r}")
    R0 = np.asarray(R0, dtype=float)
    anchor = np.eye(3)
    angles = rotation_to_euler(R0)
    if abs(angles[1]) > np.pi / 2 - GIMBAL_MARGIN:
        warnings.warn("initial pitch near +-90 deg; anchoring the Euler parametrisation at the start", GimbalLockWarning, stacklevel=2)
        anchor, angles = R0.copy(), np.zeros(3)
    x = np.concatenate([angles, np.asarray(t0, dtype=float)])

    rng_len = float(np.mean(np.linalg.norm(predict_body_vectors(R0, t0, obs), axis=1)))
    s_min = min(noise.sigma_azimuth, noise.sigma_elevation)
    d2 = np.array([s_min] * 3 + [s_min * max(rng_len, 1.0)] * 3) ** 2

    def direction(x, g):
        if opts.preconditioner == "fisher":
            w, q = np.linalg.eigh(fisher_information(x, obs, noise, anchor))
            if np.all(np.isfinite(w)) and w[-1] > 0:
                w = np.maximum(w, 1e-10 * w[-1])
                return -q @ ((q.T @ g) / w)
        return -d2 * g

    def state(it, x, f, g):
        errs = truth(*params_to_pose(x, anchor)) if truth is not None else (None, None)
        return MlState(it, x.copy(), f, float(np.linalg.norm(g)), *errs)

    f = nll_from_params(x, obs, noise, anchor)
    g = gradient(x, obs, noise, anchor)
    trace = [state(0, x, f, g)]
    reason = "max_iter"
    for it in range(1, opts.max_iter + 1):
        if np.linalg.norm(g) < opts.grad_tol:
            reason = "gradient"
            break
        d = direction(x, g)
        slope = float(g @ d)
        step = opts.initial_step
        for _ in range(opts.max_backtracks):
            x_new = x + step * d
            f_new = nll_from_params(x_new, obs, noise, anchor)
            if f_new <= f + opts.armijo * step * slope:
                break
            step *= opts.shrink
        else:
            reason = "line_search"
            break
        x, f = x_new, f_new
        if abs(x[1]) > np.pi / 2 - GIMBAL_MARGIN:
            warnings.warn("pitch near +-90 deg; re-anchoring the Euler parametrisation", GimbalLockWarning, stacklevel=2)
            anchor = params_to_pose(x, anchor)[0]
            x = np.concatenate([np.zeros(3), x[3:]])
        g = gradient(x, obs, noise, anchor)
        trace.append(state(it, x, f, g))
        if len(trace) > opts.window:
            old = trace[-1 - opts.window].nll
            if old - f <= opts.rel_tol * max(abs(old), 1e-300):
                reason = "stalled"
                break
    R, t = params_to_pose(x, anchor)
    return MleResult(R, t, trace, reason, anchor)
