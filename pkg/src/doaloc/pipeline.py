"""End-to-end estimators: linear least squares, SDP+O and SDP+O+ML.

``SDP+O`` solves the rank-relaxed program, truncates to rank one, and
projects the rotation block onto SO(3).  ``SDP+O+ML`` then refines that
estimate by maximum likelihood on body-frame angles.

Positions are divided by a characteristic length before the lifted problem
is built, which keeps the cost matrix well conditioned whatever the units;
the lifted solution is mapped back to metres before extraction so that the
rank-one truncation acts on the same matrix as in the unscaled problem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import rotation_constraints
from .errors import AmbiguousSolutionWarning, SolverError
from .geometry import Pose, GLOBAL, local_ins
from .linear_system import Measurements, as_measurements, assemble, pack_psi, solve_ls
from .mle import BodyObservations, MleOptions, MleResult, NoiseModel, refine
from .polish import polish_pose
from .procrustes import closest_rotation
from .sdp import (
    SdpSolution,
    SolverOptions,
    Status,
    apply_shift,
    apply_translation_scaling,
    extract_psi,
    lift,
    solve_relaxed,
)

# rank ratio above which the relaxation is reported as not pinning down one pose
AMBIGUITY_RATIO = 1e-2
MIN_EPOCHS_SDP = 4
METHODS = ("ls", "sdp", "sdp+ml")


@dataclass
class SolveReport:
    method: str
    rotation: np.ndarray
    translation: np.ndarray
    status: str = "optimal"
    residual_norm: float = np.nan
    rank_ratio: float = np.nan
    ambiguous: bool = False
    notes: list[str] = field(default_factory=list)
    sdp: SdpSolution | None = None
    raw_rotation: np.ndarray | None = None
    projected: tuple[np.ndarray, np.ndarray] | None = None
    initial: tuple[np.ndarray, np.ndarray] | None = None
    mle: MleResult | None = None
    metrics: dict | None = None

    @property
    def pose(self) -> Pose:
        return Pose(self.rotation, self.translation, GLOBAL, local_ins("B"))

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "status": self.status,
            "R_est": self.rotation.tolist(),
            "t_est": self.translation.tolist(),
            "residuals": {"linear_system_norm": self.residual_norm},
            "rank_ratio": None if np.isnan(self.rank_ratio) else self.rank_ratio,
            "ambiguous": self.ambiguous,
            "notes": list(self.notes),
        }
        if self.sdp is not None:
            d["residuals"].update(
                {
                    "max_constraint": self.sdp.max_feasibility_residual,
                    "anchor": self.sdp.anchor_residual,
                    "duality_gap": self.sdp.gap,
                }
            )
            d["sdp_iterations"] = self.sdp.iterations
        if self.mle is not None:
            d["mle_trace"] = [
                {
                    "iteration": s.iteration,
                    "nll": s.nll,
                    "gradient_norm": s.gradient_norm,
                    **({"rotation_error_rad": s.rotation_error} if s.rotation_error is not None else {}),
                    **({"position_error": s.position_error} if s.position_error is not None else {}),
                }
                for s in self.mle.trace
            ]
            d["mle_stop_reason"] = self.mle.reason
        if self.metrics is not None:
            d["metrics"] = dict(self.metrics)
        return d


def characteristic_length(m: Measurements) -> float:
    """RMS distance of all positions from the origin (at least 1)."""
    pts = np.vstack([m.p_a, m.p_b])
    return float(max(np.sqrt(np.mean(np.sum(pts**2, axis=1))), 1.0))


def _scaled(m: Measurements, L: float) -> Measurements:
    return Measurements(m.p_a / L, m.p_b / L, m.azimuth, m.elevation)


def solve_linear(data) -> SolveReport:
    """Unconstrained least squares; the rotation block is returned as is."""
    m = as_measurements(data)
    sol = solve_ls(assemble(m))
    rep = SolveReport("ls", sol.rotation, sol.translation, residual_norm=sol.residual_norm)
    if sol.rank_deficient:
        rep.status = "rank_deficient"
        rep.notes.append(f"linear system rank {sol.rank} < 12")
    return rep


def solve_sdp_o(data, opts: SolverOptions | None = None) -> SolveReport:
    """Relaxed SDP, rank-one truncation and Procrustes projection."""
    opts = opts or SolverOptions()
    m = as_measurements(data)
    shift = np.zeros(3) if opts.t_shift is None else np.asarray(opts.t_shift, dtype=float)
    if opts.t_shift is not None:
        m = apply_shift(m, shift)

    L = characteristic_length(m)
    system = assemble(_scaled(m, L))
    # unknown translation is t / L here; with t_scale it becomes t / t_scale
    t_unit = L
    if opts.t_scale is not None:
        system = apply_translation_scaling(system, opts.t_scale / L)
        t_unit = 1.0
    problem = lift(system, rotation_constraints(opts.constraint_set))
    sol = solve_relaxed(problem, opts)

    d = np.ones(problem.n + 1)
    d[9:12] = t_unit
    X = sol.X * np.outer(d, d)
    ext = extract_psi(X, problem.anchor)
    t_back = 1.0 if opts.t_scale is None else opts.t_scale
    R_hat = ext.psi[:9].reshape(3, 3)
    t_hat = ext.psi[9:12] * t_back + shift
    if not np.all(np.isfinite(ext.psi)):
        raise SolverError("rank-one extraction failed (anchor entry vanished)")
    R_bar = closest_rotation(R_hat)
    projected = (R_bar, t_hat)
    if opts.polish:
        R_bar, t_s = polish_pose(assemble(_scaled(m, L)), R_bar, t_hat - shift, L)
        t_hat = t_s + shift

    full = assemble(as_measurements(data))
    resid = float(np.linalg.norm(full.A @ pack_psi(R_bar, t_hat) - full.b))
    rep = SolveReport(
        "sdp",
        R_bar,
        t_hat,
        status=sol.status.value,
        residual_norm=resid,
        rank_ratio=ext.rank_ratio,
        sdp=sol,
        raw_rotation=R_hat,
        projected=projected,
    )
    notes = []
    if m.K < MIN_EPOCHS_SDP:
        notes.append(f"only {m.K} epochs; at least {MIN_EPOCHS_SDP} are needed for a unique pose")
    if ext.rank_ratio > AMBIGUITY_RATIO:
        notes.append(f"relaxed solution far from rank one (sigma2/sigma1 = {ext.rank_ratio:.3g})")
    if ext.degenerate_top:
        notes.append("two leading singular values coincide")
    rep.ambiguous = bool(notes)
    rep.notes.extend(notes)
    if rep.ambiguous:
        warnings.warn("; ".join(notes), AmbiguousSolutionWarning, stacklevel=2)
    return rep


def refine_report(rep: SolveReport, obs: BodyObservations, noise: NoiseModel, opts: MleOptions | None = None, truth=None) -> SolveReport:
    """Maximum-likelihood refinement of an existing estimate."""
    res = refine(rep.rotation, rep.translation, obs, noise, opts, truth)
    return replace(
        rep,
        method="sdp+ml",
        rotation=res.rotation,
        translation=res.translation,
        initial=(rep.rotation, rep.translation),
        mle=res,
        notes=rep.notes + [f"ML refinement stopped: {res.reason}"],
    )


def localise(
    measurements: Measurements,
    method: str = "sdp+ml",
    body: BodyObservations | None = None,
    noise: NoiseModel | None = None,
    solver: SolverOptions | None = None,
    mle: MleOptions | None = None,
    truth=None,
) -> SolveReport:
    """Run one of ``"ls"``, ``"sdp"`` or ``"sdp+ml"``.

    ``"sdp+ml"`` needs body-frame observations and a noise model; ``truth``
    (a callable returning rotation and position errors for ``(R, t)``) adds
    error columns to the ML trace.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "ls":
        return solve_linear(measurements)
    rep = solve_sdp_o(measurements, solver)
    if method == "sdp":
        return rep
    if body is None or noise is None:
        raise ValueError("ML refinement needs body-frame observations and a noise model")
    if rep.status != Status.OPTIMAL.value:
        return rep
    return refine_report(rep, body, noise, mle, truth)


def solve_scenario(scn, method: str = "sdp+ml", solver=None, mle=None, noise: NoiseModel | None = None, track: bool = False) -> SolveReport:
    """Solve the B-from-A problem of a scenario and attach error metrics."""
    noise = noise or scn.noise_model
    truth = None
    if track:
        def truth(R, t):
            e = scn.evaluate(R, t)
            return e.rotation_error_rad, e.position_error
    rep = localise(
        scn.measurements(),
        method,
        scn.body_observations(),
        noise,
        solver,
        mle,
        truth,
    )
    e = scn.evaluate(rep.rotation, rep.translation)
    rep.metrics = {"position_error": e.position_error}
    if method != "ls":
        rep.metrics["rotation_error_rad"] = e.rotation_error_rad
    return rep
