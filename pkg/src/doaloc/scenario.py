"""Synthetic flight scenarios with drifted INS frames and noisy DOA.

Agent ``A`` knows its global position; agents ``B`` (and ``C`` in the
three-agent setting) only know positions in their own INS frames, which
are related to the global frame by a constant drift pose.  Each observer
measures the DOA toward a broadcaster in its body-fixed frame, with
additive Gaussian noise on azimuth and elevation.

All random draws come from child generators of one ``SeedSequence`` (one
per agent track, one for the drift poses, one per DOA stream), and draws
are made epoch by epoch.  A scenario generated with ``K`` epochs is
therefore an exact prefix of the same seed generated with more epochs, and
the noise is stored as unit-variance draws so the same realisation can be
rescaled to any noise level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import (
    Pose,
    doa_to_unit_vector,
    euler_to_rotation,
    local_ins,
    rot_y,
    rot_z,
    rotation_to_euler,
    unit_vector_to_doa,
    wrap_angle,
    GLOBAL,
)
from .linear_system import Measurements
from .metrics import ErrorReport, error_report
from .mle import AttitudeLog, BodyObservations, NoiseModel

STREAMS_TWO = (("B", "A"),)
STREAMS_THREE = (("B", "A"), ("C", "A"), ("B", "C"))


@dataclass(frozen=True)
class TrajectoryParams:
    """Kinematic sampling rules; angles in degrees, lengths in metres."""

    horizontal_sep_init: float = 800.0
    vertical_sep_init: float = 50.0
    altitude_b: float = 300.0
    speed: float = 50.0
    sample_period: float = 5.0
    turn_mean_bound_deg: float = 40.0
    turn_std_deg: float = 30.0
    climb_std_deg: float = 5.0
    planar_a: bool = False


@dataclass(frozen=True)
class DriftParams:
    euler_bound: float = np.pi
    translation_bound: float = 600.0


@dataclass(frozen=True)
class AgentTrack:
    """Global positions ``(K, 3)`` and body attitudes ``R_global^body`` ``(K, 3, 3)``."""

    positions: np.ndarray
    attitudes: np.ndarray

    def __getitem__(self, idx) -> AgentTrack:
        return AgentTrack(self.positions[idx], self.attitudes[idx])


def body_attitude(heading: float, climb: float) -> np.ndarray:
    """Rotation from global axes to body axes (x forward, zero roll)."""
    return (rot_z(heading) @ rot_y(-climb)).T


def _stream_key(obs: str, src: str) -> str:
    return f"{obs}{src}"


@dataclass(frozen=True)
class Scenario:
    tracks: dict[str, AgentTrack]
    drifts: dict[str, Pose]
    sigma: tuple[float, float] = (0.0, 0.0)
    unit_noise: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int | None = None
    observed: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    # ---- bookkeeping ------------------------------------------------------
    @property
    def K(self) -> int:
        return len(self.tracks["A"].positions)

    @property
    def agents(self) -> list[str]:
        return sorted(self.tracks)

    @property
    def streams(self) -> tuple[tuple[str, str], ...]:
        return STREAMS_THREE if "C" in self.tracks else STREAMS_TWO

    @property
    def noise_model(self) -> NoiseModel | None:
        if self.sigma[0] > 0 and self.sigma[1] > 0:
            return NoiseModel(*self.sigma)
        return None

    def drift(self, agent: str) -> Pose:
        if agent == "A":
            return Pose.identity(GLOBAL, GLOBAL)
        return self.drifts[agent]

    # ---- geometry ---------------------------------------------------------
    def global_positions(self, agent: str) -> np.ndarray:
        return self.tracks[agent].positions

    def local_positions(self, agent: str) -> np.ndarray:
        return self.drift(agent).apply(self.tracks[agent].positions)

    def ins_attitudes(self, agent: str) -> np.ndarray:
        """``R_{X2}^{X4}(k)``: INS axes to body axes."""
        return self.tracks[agent].attitudes @ self.drift(agent).rotation.T

    def attitude_log(self, agent: str) -> AttitudeLog:
        return AttitudeLog.from_rotations(self.ins_attitudes(agent), self.local_positions(agent))

    def true_pose(self, obs: str = "B", src: str = "A") -> Pose:
        """Pose mapping ``src`` native coordinates to ``obs`` INS coordinates."""
        return self.drift(obs).compose(self.drift(src).inverse())

    # ---- measurements -----------------------------------------------------
    def clean_body_doa(self, obs: str, src: str):
        rel = self.drift(obs).apply(self.tracks[src].positions) - self.local_positions(obs)
        v = self.attitude_log(obs).to_body(rel)
        return unit_vector_to_doa(v)

    def body_doa(self, obs: str, src: str):
        key = _stream_key(obs, src)
        if key in self.observed:
            return self.observed[key]
        az, el = self.clean_body_doa(obs, src)
        z = self.unit_noise.get(key)
        if z is not None and (self.sigma[0] > 0 or self.sigma[1] > 0):
            az = wrap_angle(az + self.sigma[0] * z[:, 0])
            el = el + self.sigma[1] * z[:, 1]
        return az, el

    def ins_doa(self, obs: str, src: str):
        az, el = self.body_doa(obs, src)
        return unit_vector_to_doa(self.attitude_log(obs).to_ins(doa_to_unit_vector(az, el).reshape(-1, 3)))

    def measurements(self, obs: str = "B", src: str = "A") -> Measurements:
        az, el = self.ins_doa(obs, src)
        return Measurements(self.local_positions(src), self.local_positions(obs), az, el)

    def body_observations(self, obs: str = "B", src: str = "A") -> BodyObservations:
        az, el = self.body_doa(obs, src)
        return BodyObservations(self.local_positions(src), az, el, self.attitude_log(obs))

    # ---- transformations --------------------------------------------------
    def truncate(self, K: int) -> Scenario:
        if not 1 <= K <= self.K:
            raise ValueError(f"cannot truncate {self.K} epochs to {K}")
        return replace(
            self,
            tracks={a: tr[:K] for a, tr in self.tracks.items()},
            unit_noise={k: v[:K] for k, v in self.unit_noise.items()},
            observed={k: (v[0][:K], v[1][:K]) for k, v in self.observed.items()},
        )

    def with_noise(self, sigma_az: float, sigma_el: float) -> Scenario:
        """Same unit noise draws rescaled to new standard deviations (radians)."""
        return replace(self, sigma=(float(sigma_az), float(sigma_el)), observed={})

    def redraw_noise(self, sigma_az: float, sigma_el: float, seed) -> Scenario:
        """Fresh unit noise for every stream from ``seed``, scaled to ``sigma`` (radians)."""
        gens = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(STREAMS_THREE))]
        unit = {_stream_key(o, s): g.standard_normal((self.K, 2)) for (o, s), g in zip(STREAMS_THREE, gens) if (o, s) in self.streams}
        return replace(self, sigma=(float(sigma_az), float(sigma_el)), unit_noise=unit, observed={}, seed=seed)

    # ---- evaluation -------------------------------------------------------
    def evaluate(self, R, t, obs: str = "B", src: str = "A") -> ErrorReport:
        truth = self.true_pose(obs, src)
        # observer trajectory expressed in the broadcaster's native frame
        p_true = self.drift(src).apply(self.global_positions(obs))
        p_ref = self.local_positions(src)
        return error_report(R, t, truth.rotation, self.local_positions(obs), p_true, p_ref)

    # ---- serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        agents = []
        for a in self.agents:
            frame = "A1" if a == "A" else f"{a}2"
            agents.append(
                {
                    "id": a,
                    "frame": frame,
                    "positions": self.local_positions(a).tolist(),
                    "attitudes": [rotation_to_euler(m).tolist() for m in self.ins_attitudes(a)],
                }
            )
        drift = [
            {"agent": a, "euler": rotation_to_euler(self.drifts[a].rotation).tolist(), "t": self.drifts[a].translation.tolist()}
            for a in sorted(self.drifts)
        ]
        doa = []
        for obs, src in self.streams:
            az, el = self.body_doa(obs, src)
            doa.append({"observer": obs, "broadcaster": src, "frame": f"{obs}4", "azimuth": az.tolist(), "elevation": el.tolist()})
        return {
            "agents": agents,
            "drift": drift[0] if len(drift) == 1 else drift,
            "noise": {"sigma_az_deg": float(np.rad2deg(self.sigma[0])), "sigma_el_deg": float(np.rad2deg(self.sigma[1]))},
            "seed": self.seed,
            "doa": doa,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        drift_list = d["drift"] if isinstance(d["drift"], list) else [d["drift"]]
        drifts = {}
        for entry in drift_list:
            a = entry["agent"]
            drifts[a] = Pose(euler_to_rotation(entry["euler"]), np.asarray(entry["t"], dtype=float), GLOBAL, local_ins(a))
        tracks = {}
        for ag in d["agents"]:
            a = ag["id"]
            p_local = np.asarray(ag["positions"], dtype=float).reshape(-1, 3)
            ins_att = np.array([euler_to_rotation(e) for e in ag["attitudes"]]).reshape(-1, 3, 3)
            drift = drifts.get(a)
            if drift is None:
                tracks[a] = AgentTrack(p_local, ins_att)
            else:
                tracks[a] = AgentTrack(drift.inverse().apply(p_local), ins_att @ drift.rotation)
        noise = d.get("noise") or {}
        sigma = (float(np.deg2rad(noise.get("sigma_az_deg", 0.0))), float(np.deg2rad(noise.get("sigma_el_deg", 0.0))))
        observed = {}
        for s in d.get("doa", []):
            observed[_stream_key(s["observer"], s["broadcaster"])] = (
                np.asarray(s["azimuth"], dtype=float),
                np.asarray(s["elevation"], dtype=float),
            )
        return cls(tracks, drifts, sigma, {}, d.get("seed"), observed)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> Scenario:
        return cls.from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# generation


def _track(rng: np.random.Generator, start, K: int, p: TrajectoryParams, planar: bool) -> AgentTrack:
    step = p.speed * p.sample_period
    heading = rng.uniform(0.0, 2 * np.pi)
    c = np.deg2rad(rng.uniform(-p.turn_mean_bound_deg, p.turn_mean_bound_deg))
    pos = np.empty((K, 3))
    att = np.empty((K, 3, 3))
    pos[0] = start
    for k in range(K):
        climb = 0.0 if planar else np.deg2rad(rng.normal(0.0, p.climb_std_deg))
        turn = rng.normal(c, np.deg2rad(p.turn_std_deg))
        att[k] = body_attitude(heading, climb)
        if k + 1 < K:
            pos[k + 1] = pos[k] + step * np.array([np.cos(climb) * np.cos(heading), np.cos(climb) * np.sin(heading), np.sin(climb)])
        heading += turn
    return AgentTrack(pos, att)


def _drift(rng: np.random.Generator, agent: str, d: DriftParams) -> Pose:
    R = euler_to_rotation(rng.uniform(-d.euler_bound, d.euler_bound, size=3))
    t = rng.uniform(-d.translation_bound, d.translation_bound, size=3)
    return Pose(R, t, GLOBAL, local_ins(agent))


def generate_scenario(
    K: int,
    seed: int | np.random.SeedSequence = 0,
    params: TrajectoryParams | None = None,
    drift: DriftParams | None = None,
    sigma: tuple[float, float] = (0.0, 0.0),
    agents: int = 2,
) -> Scenario:
    """Draw trajectories, drift poses and noise for ``agents`` (2 or 3) agents.

    ``sigma`` holds azimuth/elevation noise standard deviations in radians.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if agents not in (2, 3):
        raise ValueError("agents must be 2 or 3")
    params = params or TrajectoryParams()
    drift = drift or DriftParams()
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    g_init, g_a, g_b, g_c, g_drift, *g_noise = [np.random.default_rng(s) for s in ss.spawn(5 + 3)]

    bearing_a, bearing_c = g_init.uniform(0.0, 2 * np.pi, size=2)
    h = params.horizontal_sep_init
    start_b = np.array([0.0, 0.0, params.altitude_b])
    start_a = start_b + np.array([h * np.cos(bearing_a), h * np.sin(bearing_a), params.vertical_sep_init])
    start_c = start_b + np.array([h * np.cos(bearing_c), h * np.sin(bearing_c), params.vertical_sep_init / 2])

    tracks = {"A": _track(g_a, start_a, K, params, params.planar_a), "B": _track(g_b, start_b, K, params, False)}
    drifts = {"B": _drift(g_drift, "B", drift)}
    streams = STREAMS_TWO
    if agents == 3:
        tracks["C"] = _track(g_c, start_c, K, params, False)
        drifts["C"] = _drift(g_drift, "C", drift)
        streams = STREAMS_THREE
    unit_noise = {_stream_key(o, s): g.standard_normal((K, 2)) for (o, s), g in zip(STREAMS_THREE, g_noise) if (o, s) in streams}
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    return Scenario(tracks, drifts, (float(sigma[0]), float(sigma[1])), unit_noise, seed_val)


def from_positions(
    p_a,
    p_b_global,
    drift: Pose,
    attitudes_b=None,
    sigma: tuple[float, float] = (0.0, 0.0),
    seed: int | None = None,
) -> Scenario:
    """Two-agent scenario from explicit global trajectories.

    ``attitudes_b`` defaults to body axes parallel to the INS axes.
    """
    p_a = np.atleast_2d(np.asarray(p_a, dtype=float))
    p_b = np.atleast_2d(np.asarray(p_b_global, dtype=float))
    K = len(p_a)
    if attitudes_b is None:
        attitudes_b = np.broadcast_to(drift.rotation, (K, 3, 3)).copy()
    unit = {}
    if seed is not None:
        unit["BA"] = np.random.default_rng(seed).standard_normal((K, 2))
    eye = np.broadcast_to(np.eye(3), (K, 3, 3)).copy()
    return Scenario({"A": AgentTrack(p_a, eye), "B": AgentTrack(p_b, np.asarray(attitudes_b, dtype=float))}, {"B": drift}, sigma, unit, seed)


def straight_line_scenario(K: int, seed: int = 0, spacing: float = 100.0) -> Scenario:
    """Agent A on the x-axis, ``(spacing * k, 0, 0)``; B on a generic track."""
    rng = np.random.default_rng(seed)
    p_a = np.column_stack([spacing * np.arange(K), np.zeros(K), np.zeros(K)])
    p_b = np.column_stack([rng.uniform(-500, 500, K), rng.uniform(300, 900, K), rng.uniform(-200, 200, K)])
    return from_positions(p_a, p_b, _drift(rng, "B", DriftParams()))


def parallel_doa_scenario(K: int, seed: int = 0, offset=(600.0, 400.0, 50.0)) -> Scenario:
    """Both agents fly the same generic path, B trailing A by a fixed offset.

    The relative position, hence every INS-frame DOA, is constant.
    """
    rng = np.random.default_rng(seed)
    path = np.cumsum(rng.normal(0.0, 250.0, size=(K, 3)) * [1, 1, 0.1], axis=0) + [0, 0, 300]
    return from_positions(path + np.asarray(offset), path, _drift(rng, "B", DriftParams()))
