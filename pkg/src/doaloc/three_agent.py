"""Joint localisation of two GPS-denied agents (B and C) from one GPS agent A.

The unknown 36-vector stacks three pair poses::

    [R_AB (9), t_AB (3), R_AC (9), t_AC (3), R_CB (9), t_CB (3)]

with ``p^B = R_AB p^A + t_AB``, ``p^C = R_AC p^A + t_AC`` and
``p^B = R_CB p^C + t_CB`` (superscripts name INS frames; A's frame is the
global one).  Measurements are B->A, C->A and B->C DOA in the observers'
INS frames.  Besides 21 rotation constraints per block, the program
carries 27 rotation-composition and 9 translation-compatibility
constraints, each written as a quadratic form in the 36 unknowns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation as _Rot

from .constraints import Family, QuadraticConstraint, _Poly, rotation_block_constraints
from .errors import AmbiguousSolutionWarning, EmptyInputError, SolverError
from .geometry import GLOBAL, Pose, local_ins
from .linear_system import LinearSystem, Measurements, collinearity_rows
from .mle import MleOptions, NoiseModel, residuals
from .polish import polish_chain
from .procrustes import closest_rotation
from .sdp import SdpSolution, SolverOptions, extract_psi, lift, solve_relaxed

N_TRI = 36
BLOCKS = {"AB": 0, "AC": 12, "CB": 24}
AMBIGUITY_RATIO = 1e-2


@dataclass(frozen=True)
class TriMeasurements:
    """Per-epoch positions and the three DOA streams (INS frames)."""

    p_a: np.ndarray
    p_b: np.ndarray
    p_c: np.ndarray
    doa_ba: tuple[np.ndarray, np.ndarray]
    doa_ca: tuple[np.ndarray, np.ndarray]
    doa_bc: tuple[np.ndarray, np.ndarray]

    @property
    def K(self) -> int:
        return len(np.atleast_2d(self.p_a))

    def pair(self, name: str) -> Measurements:
        """Two-agent view of one stream: ``"BA"``, ``"CA"`` or ``"BC"``."""
        src, obs, doa = {"BA": (self.p_a, self.p_b, self.doa_ba), "CA": (self.p_a, self.p_c, self.doa_ca), "BC": (self.p_c, self.p_b, self.doa_bc)}[name]
        return Measurements(src, obs, *doa)

    @classmethod
    def from_scenario(cls, scn) -> TriMeasurements:
        return cls(
            scn.local_positions("A"),
            scn.local_positions("B"),
            scn.local_positions("C"),
            scn.ins_doa("B", "A"),
            scn.ins_doa("C", "A"),
            scn.ins_doa("B", "C"),
        )


def pack_tri(poses: dict[str, tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    psi = np.empty(N_TRI)
    for name, off in BLOCKS.items():
        R, t = poses[name]
        psi[off : off + 9] = np.asarray(R).reshape(9)
        psi[off + 9 : off + 12] = t
    return psi


def unpack_tri(psi) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    psi = np.asarray(psi, dtype=float)
    return {name: (psi[off : off + 9].reshape(3, 3).copy(), psi[off + 9 : off + 12].copy()) for name, off in BLOCKS.items()}


def assemble_tri(m: TriMeasurements) -> LinearSystem:
    """``6K x 36`` system: B->A rows, then C->A rows, then B->C rows."""
    if m.K == 0:
        raise EmptyInputError("no measurement epochs")
    K = m.K
    A = np.zeros((6 * K, N_TRI))
    b = np.empty(6 * K)
    for i, (name, blk) in enumerate((("BA", "AB"), ("CA", "AC"), ("BC", "CB"))):
        p = m.pair(name)
        Ai, bi = collinearity_rows(p.p_a, p.p_b, p.azimuth, p.elevation)
        rows = slice(2 * K * i, 2 * K * (i + 1))
        off = BLOCKS[blk]
        A[rows, off : off + 12] = Ai
        b[rows] = bi
    return LinearSystem(A, b)


def _r(blk: str, i: int, j: int) -> int:
    return BLOCKS[blk] + 3 * i + j


def _t(blk: str, i: int) -> int:
    return BLOCKS[blk] + 9 + i


def composition_constraints() -> list[QuadraticConstraint]:
    """27 entries of the rotation chain written in each of the three frames.

    ``R_AB - R_CB R_AC``, ``R_AC - R_CB^T R_AB`` and ``R_CB - R_AB R_AC^T``.
    """
    out = []
    for i in range(3):
        for j in range(3):
            p = _Poly(N_TRI).lin(_r("AB", i, j))
            for k in range(3):
                p.quad(_r("CB", i, k), _r("AC", k, j), -1.0)
            out.append(QuadraticConstraint(p.Q, f"B:R{i + 1}{j + 1}", Family.COMPOSITION))
    for i in range(3):
        for j in range(3):
            p = _Poly(N_TRI).lin(_r("AC", i, j))
            for k in range(3):
                p.quad(_r("CB", k, i), _r("AB", k, j), -1.0)
            out.append(QuadraticConstraint(p.Q, f"C:R{i + 1}{j + 1}", Family.COMPOSITION))
    for i in range(3):
        for j in range(3):
            p = _Poly(N_TRI).lin(_r("CB", i, j))
            for k in range(3):
                p.quad(_r("AB", i, k), _r("AC", j, k), -1.0)
            out.append(QuadraticConstraint(p.Q, f"A:R{i + 1}{j + 1}", Family.COMPOSITION))
    return out


def translation_constraints() -> list[QuadraticConstraint]:
    """Nine translation-compatibility equations, three per frame.

    In B: ``t_AB - R_CB t_AC - t_CB``; in C: ``R_CB^T t_AB - t_AC - R_CB^T t_CB``;
    in A: ``R_AB^T t_AB - R_AC^T t_AC - R_AB^T t_CB``.
    """
    out = []
    for i in range(3):
        p = _Poly(N_TRI).lin(_t("AB", i)).lin(_t("CB", i), -1.0)
        for k in range(3):
            p.quad(_r("CB", i, k), _t("AC", k), -1.0)
        out.append(QuadraticConstraint(p.Q, f"B:t{i + 1}", Family.TRANSLATION))
    for i in range(3):
        p = _Poly(N_TRI).lin(_t("AC", i), -1.0)
        for k in range(3):
            p.quad(_r("CB", k, i), _t("AB", k))
            p.quad(_r("CB", k, i), _t("CB", k), -1.0)
        out.append(QuadraticConstraint(p.Q, f"C:t{i + 1}", Family.TRANSLATION))
    for i in range(3):
        p = _Poly(N_TRI)
        for k in range(3):
            p.quad(_r("AB", k, i), _t("AB", k))
            p.quad(_r("AC", k, i), _t("AC", k), -1.0)
            p.quad(_r("AB", k, i), _t("CB", k), -1.0)
        out.append(QuadraticConstraint(p.Q, f"A:t{i + 1}", Family.TRANSLATION))
    return out


def tri_constraints() -> list[QuadraticConstraint]:
    """All 99 constraints: 3 x 21 rotation, 27 composition, 9 translation."""
    cons = []
    for blk in ("AB", "AC", "CB"):
        cons += rotation_block_constraints(N_TRI, BLOCKS[blk], f"{blk}:")
    return cons + composition_constraints() + translation_constraints()


def chain_residuals(poses) -> tuple[float, float]:
    """Largest rotation-chain and translation-chain mismatch."""
    R_ab, t_ab = poses["AB"]
    R_ac, t_ac = poses["AC"]
    R_cb, t_cb = poses["CB"]
    rot = np.max(np.abs(R_ab - R_cb @ R_ac))
    trans = np.max(np.abs(t_ab - R_cb @ t_ac - t_cb))
    return float(rot), float(trans)


@dataclass
class TriReport:
    poses: dict[str, tuple[np.ndarray, np.ndarray]]
    status: str
    rank_ratio: float
    ambiguous: bool
    rotation_chain_residual: float
    translation_chain_residual: float
    measurements_used: int
    sdp: SdpSolution | None = None
    notes: list[str] = field(default_factory=list)
    metrics: dict | None = None
    projected_chain_residuals: tuple[float, float] | None = None

    @property
    def pose_b(self) -> Pose:
        return Pose(*self.poses["AB"], GLOBAL, local_ins("B"))

    @property
    def pose_c(self) -> Pose:
        return Pose(*self.poses["AC"], GLOBAL, local_ins("C"))

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "rank_ratio": self.rank_ratio,
            "ambiguous": self.ambiguous,
            "measurements_used": self.measurements_used,
            "residuals": {"rotation_chain": self.rotation_chain_residual, "translation_chain": self.translation_chain_residual},
            "notes": list(self.notes),
        }
        for name, (R, t) in self.poses.items():
            d[f"R_{name}"] = R.tolist()
            d[f"t_{name}"] = t.tolist()
        if self.sdp is not None:
            d["residuals"]["max_constraint"] = self.sdp.max_feasibility_residual
        if self.metrics is not None:
            d["metrics"] = dict(self.metrics)
        return d


def _characteristic_length(m: TriMeasurements) -> float:
    pts = np.vstack([m.p_a, m.p_b, m.p_c])
    return float(max(np.sqrt(np.mean(np.sum(pts**2, axis=1))), 1.0))


def solve_tri(m: TriMeasurements, opts: SolverOptions | None = None) -> TriReport:
    """Joint SDP over all three pair poses, then per-block Procrustes projection."""
    opts = opts or SolverOptions()
    L = _characteristic_length(m)
    scaled = TriMeasurements(m.p_a / L, m.p_b / L, m.p_c / L, m.doa_ba, m.doa_ca, m.doa_bc)
    problem = lift(assemble_tri(scaled), tri_constraints())
    sol = solve_relaxed(problem, opts)

    d = np.ones(N_TRI + 1)
    for off in BLOCKS.values():
        d[off + 9 : off + 12] = L
    ext = extract_psi(sol.X * np.outer(d, d), problem.anchor)
    if not np.all(np.isfinite(ext.psi)):
        raise SolverError("rank-one extraction failed (anchor entry vanished)")
    raw = unpack_tri(ext.psi)
    poses = {name: (closest_rotation(R), t) for name, (R, t) in raw.items()}
    projected = chain_residuals(poses)
    if opts.polish:
        out = polish_chain(assemble_tri(scaled), *poses["AB"], *poses["AC"], L)
        poses = dict(zip(("AB", "AC", "CB"), out))
    rot_res, trans_res = chain_residuals(poses)

    notes = []
    if m.K < 3:
        notes.append(f"only {m.K} epochs; at least 3 are needed for a unique solution")
    if ext.rank_ratio > AMBIGUITY_RATIO:
        notes.append(f"relaxed solution far from rank one (sigma2/sigma1 = {ext.rank_ratio:.3g})")
    if ext.degenerate_top:
        notes.append("two leading singular values coincide")
    if notes:
        warnings.warn("; ".join(notes), AmbiguousSolutionWarning, stacklevel=2)
    return TriReport(poses, sol.status.value, ext.rank_ratio, bool(notes), rot_res, trans_res, 6 * m.K, sol, notes, projected_chain_residuals=projected)


def _compose_cb(ab, ac):
    R_cb = ab[0] @ ac[0].T
    return R_cb, ab[1] - R_cb @ ac[1]


def refine_tri(report: TriReport, scn, noise: NoiseModel, opts: MleOptions | None = None, sweeps: int = 2) -> TriReport:
    """Alternating ML refinement of the two A-relative poses (an extension).

    Each sweep first frees ``(R_AB, t_AB)`` with ``(R_AC, t_AC)`` held,
    then the reverse.  The free pose is fitted to every stream it touches
    (B->A or C->A, plus B->C through the composed B-C pose), so the chain
    constraints hold exactly on output.
    """
    opts = opts or MleOptions()
    streams = {"BA": scn.body_observations("B", "A"), "CA": scn.body_observations("C", "A"), "BC": scn.body_observations("B", "C")}
    w = np.array([1.0 / noise.sigma_azimuth, 1.0 / noise.sigma_elevation])
    poses = {"AB": report.poses["AB"], "AC": report.poses["AC"]}

    def whitened(R, t, obs):
        ra, re = residuals(R, t, obs)
        return np.concatenate([ra * w[0], re * w[1]])

    for _ in range(sweeps):
        for free, own in (("AB", "BA"), ("AC", "CA")):
            R0, t0 = poses[free]

            def fun(x, free=free, own=own, R0=R0, t0=t0):
                trial = dict(poses)
                trial[free] = (R0 @ _Rot.from_rotvec(x[:3]).as_matrix(), t0 + x[3:])
                cb = _compose_cb(trial["AB"], trial["AC"])
                return np.concatenate([whitened(*trial[free], streams[own]), whitened(*cb, streams["BC"])])

            x = least_squares(fun, np.zeros(6), method="trf", max_nfev=opts.max_iter, gtol=opts.grad_tol * 1e-3).x
            poses[free] = (R0 @ _Rot.from_rotvec(x[:3]).as_matrix(), t0 + x[3:])
    poses["CB"] = _compose_cb(poses["AB"], poses["AC"])
    rot_res, trans_res = chain_residuals(poses)
    return TriReport(
        poses,
        report.status,
        report.rank_ratio,
        report.ambiguous,
        rot_res,
        trans_res,
        report.measurements_used,
        report.sdp,
        report.notes + [f"alternating ML refinement ({sweeps} sweeps)"],
        projected_chain_residuals=report.projected_chain_residuals,
    )


def solve_tri_scenario(scn, opts: SolverOptions | None = None, mle: bool = False, mle_opts: MleOptions | None = None) -> TriReport:
    rep = solve_tri(TriMeasurements.from_scenario(scn), opts)
    if mle and scn.noise_model is not None:
        rep = refine_tri(rep, scn, scn.noise_model, mle_opts)
    metrics = {}
    for name, (obs, src) in {"AB": ("B", "A"), "AC": ("C", "A")}.items():
        e = scn.evaluate(*rep.poses[name], obs, src)
        metrics[f"rotation_error_rad_{obs}"] = e.rotation_error_rad
        metrics[f"position_error_{obs}"] = e.position_error
    rep.metrics = metrics
    return rep
