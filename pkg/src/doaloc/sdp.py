"""Rank-relaxed semidefinite program and rank-one extraction.

The least-squares problem ``min ||A psi - b||^2`` subject to quadratic
constraints is lifted to ``min <P, X>`` over ``X = x x^T`` with
``x = [psi, -1]``; dropping the rank-one requirement gives the convex
program

    minimise  <P, X>
    s.t.      <Q_i, X> = 0,  X[anchor, anchor] = 1,  X >= 0,

which is solved by :func:`solve_relaxed` with a dense primal-dual
interior-point method (Nesterov-Todd scaling, Mehrotra predictor-corrector).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular

from .constraints import QuadraticConstraint
from .errors import DegenerateTopWarning, InfeasibleError, NonPositiveScaleError
from .linear_system import LinearSystem, Measurements, as_measurements

CONSISTENCY_TOL = 1e-6
DEGENERATE_TOP_RTOL = 1e-6


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    NUMERICAL_TROUBLE = "numerical_trouble"


@dataclass(frozen=True)
class SolverOptions:
    """Solver tolerances plus the conditioning aids exposed to users.

    The solver iterates until the relative duality gap is below ``tol`` and
    the relative infeasibilities below ``feas_tol``.  If numerical trouble
    stops it earlier, the best iterate is still reported as optimal when it
    meets ``accept_tol`` / ``accept_feas_tol``.

    ``t_scale`` multiplies the translation columns of ``A`` (the unknown
    becomes ``t / t_scale``); ``t_shift`` is an a-priori translation
    subtracted from observer positions before solving and added back
    afterwards.  ``polish`` runs a local refinement of the extracted pose on
    the non-relaxed problem (see :mod:`doaloc.polish`).
    """

    tol: float = 1e-12
    feas_tol: float = 1e-10
    accept_tol: float = 1e-7
    accept_feas_tol: float = 1e-8
    max_iter: int = 200
    constraint_set: str = "full"
    t_scale: float | None = None
    t_shift: tuple[float, float, float] | None = None
    polish: bool = True


@dataclass(frozen=True)
class LiftedProblem:
    P: np.ndarray
    constraints: Sequence[QuadraticConstraint]
    anchor: int

    @property
    def n(self) -> int:
        """Length of the unlifted unknown vector."""
        return self.P.shape[0] - 1


@dataclass(frozen=True)
class SdpSolution:
    X: np.ndarray
    objective: float
    feasibility_residuals: np.ndarray
    anchor_residual: float
    rank_ratio: float
    iterations: int
    status: Status
    gap: float = np.nan
    primal_infeasibility: float = np.nan
    dual_infeasibility: float = np.nan

    @property
    def max_feasibility_residual(self) -> float:
        r = self.feasibility_residuals
        return float(np.max(r)) if r.size else 0.0


@dataclass(frozen=True)
class Extraction:
    psi: np.ndarray
    rank_ratio: float
    singular_values: np.ndarray
    candidates: list = field(default_factory=list)

    @property
    def degenerate_top(self) -> bool:
        return len(self.candidates) > 1


# --------------------------------------------------------------------------
# problem construction


def lift(system: LinearSystem, constraints: Sequence[QuadraticConstraint]) -> LiftedProblem:
    """Cost ``P = [A b]^T [A b]`` with the anchor on the last entry."""
    Ab = np.column_stack([system.A, system.b])
    P = Ab.T @ Ab
    return LiftedProblem(0.5 * (P + P.T), list(constraints), Ab.shape[1] - 1)


def apply_shift(data, t_guess) -> Measurements:
    """Subtract an a-priori translation from the observer positions.

    Solving the shifted data estimates ``t - t_guess``; add ``t_guess`` to
    the recovered translation to undo the shift.
    """
    m = as_measurements(data)
    return replace(m, p_b=m.p_b - np.asarray(t_guess, dtype=float).reshape(3))


def apply_translation_scaling(system: LinearSystem, s: float, columns=slice(9, 12)) -> LinearSystem:
    """Multiply the translation columns by ``s``.

    The unknowns in those columns become ``t / s``; multiply the recovered
    entries by ``s`` to undo.
    """
    if not s > 0:
        raise NonPositiveScaleError(f"translation scale must be positive, got {s}")
    A = system.A.copy()
    A[:, columns] *= s
    return LinearSystem(A, system.b.copy())


# --------------------------------------------------------------------------
# interior-point solver


def _orthonormalise(mats: np.ndarray, rhs: np.ndarray):
    """Replace ``<A_i, X> = b_i`` by an orthonormal, full-rank equivalent."""
    m, n, _ = mats.shape
    flat = mats.reshape(m, n * n)
    u, s, vt = np.linalg.svd(flat, full_matrices=False)
    keep = s > 1e-10 * s[0]
    coef = u[:, keep].T @ rhs
    resid = np.linalg.norm(rhs - u[:, keep] @ coef)
    if resid > CONSISTENCY_TOL * (1.0 + np.linalg.norm(rhs)):
        raise InfeasibleError(f"equality constraints inconsistent (residual {resid:.3g})")
    A = vt[keep].reshape(-1, n, n)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    return A, coef / s[keep]


def _max_step(v: np.ndarray, d: np.ndarray) -> float:
    """Largest ``a`` with ``diag(v) + a d`` positive semidefinite."""
    w = 1.0 / np.sqrt(v)
    lam = np.linalg.eigvalsh(w[:, None] * d * w[None, :])[0]
    return np.inf if lam >= 0.0 else -1.0 / lam


def _schur_solver(M: np.ndarray):
    """Solver for the normal equations; falls back to an eigen-decomposition."""
    try:
        cf = cho_factor(M)
        return lambda r: cho_solve(cf, r)
    except LinAlgError:
        w, q = np.linalg.eigh(M)
        w = np.where(w > 1e-14 * w[-1], w, np.inf)
        return lambda r: q @ ((q.T @ r) / w)


@dataclass
class _IpmResult:
    X: np.ndarray
    y: np.ndarray
    S: np.ndarray
    status: Status
    iterations: int
    gap: float
    pinf: float
    dinf: float


def _ipm(C, A, b, opts: SolverOptions) -> _IpmResult:
    """Primal-dual path following for ``min <C,X> s.t. <A_i,X> = b_i, X >= 0``.

    ``A`` must have orthonormal, linearly independent rows (as produced by
    :func:`_orthonormalise`).
    """
    tol, feas_tol = opts.tol, opts.feas_tol
    n = C.shape[0]
    m = len(b)
    Af = A.reshape(m, n * n)
    eye = np.eye(n)
    norm_b = np.linalg.norm(b)
    norm_c = np.linalg.norm(C)

    xi = max(10.0, np.sqrt(n), n * (1.0 + np.max(np.abs(b))) / 2.0)
    eta = max(10.0, np.sqrt(n), norm_c)
    X = xi * eye
    S = eta * eye
    y = np.zeros(m)
    best = None
    status = Status.MAX_ITER
    it = 0
    gap = pinf = dinf = np.inf

    for it in range(opts.max_iter + 1):
        rp = b - Af @ X.ravel()
        Rd = C - (Af.T @ y).reshape(n, n) - S
        Rd = 0.5 * (Rd + Rd.T)
        pobj = float(np.vdot(C, X))
        dobj = float(b @ y)
        gap = float(np.vdot(X, S))
        pinf = np.linalg.norm(rp) / (1.0 + norm_b)
        dinf = np.linalg.norm(Rd) / (1.0 + norm_c)
        scale = 1.0 + abs(pobj)
        if pinf <= feas_tol and dinf <= feas_tol and gap <= tol * scale and abs(pobj - dobj) <= tol * scale:
            status = Status.OPTIMAL
            break
        quality = max(pinf, dinf, gap / scale, abs(pobj - dobj) / scale)
        if best is None or quality < best[0]:
            best = (quality, X, y, S, gap, pinf, dinf)
        if it == opts.max_iter:
            break
        try:
            L = cholesky(X, lower=True)
            R = cholesky(S, lower=True)
            u, v, qt = np.linalg.svd(R.T @ L)
            if v[-1] <= 0.0:
                raise LinAlgError("degenerate scaling")
            sq = np.sqrt(v)
            G = (L @ qt.T) / sq
            Ginv = sq[:, None] * solve_triangular(L, qt.T, lower=True, trans="T").T
            At = G.T @ A @ G
            Atf = At.reshape(m, n * n)
            M = Atf @ Atf.T
            solve_m = _schur_solver(M)
        except (LinAlgError, ValueError):
            status = Status.NUMERICAL_TROUBLE
            break

        Rdt = G.T @ Rd @ G
        vsum = v[:, None] + v[None, :]
        base = rp + Atf @ Rdt.ravel()

        def direction(T):
            dy = solve_m(base - Atf @ T.ravel())
            dSt = Rdt - (Atf.T @ dy).reshape(n, n)
            dSt = 0.5 * (dSt + dSt.T)
            return T - dSt, dSt, dy

        mu = gap / n
        V = np.diag(v)
        dXa, dSa, _ = direction(-V)
        ap = min(1.0, _max_step(v, dXa))
        ad = min(1.0, _max_step(v, dSa))
        mu_aff = float(np.vdot(V + ap * dXa, V + ad * dSa)) / n
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
        corr = dXa @ dSa
        T = (2.0 * sigma * mu * eye - 2.0 * V * v - (corr + corr.T)) / vsum
        dXt, dSt, dy = direction(T)
        ap = _max_step(v, dXt)
        ad = _max_step(v, dSt)
        gamma = 0.9 + 0.09 * min(1.0, ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)

        dX = G @ dXt @ G.T
        # formed in the original space; mapping dSt back through G^-1 loses accuracy
        dS = Rd - (Af.T @ dy).reshape(n, n)
        X = X + ap * 0.5 * (dX + dX.T)
        S = S + ad * 0.5 * (dS + dS.T)
        y = y + ad * dy

    if status is not Status.OPTIMAL and best is not None:
        quality, X, y, S, gap, pinf, dinf = best
        if max(pinf, dinf) <= opts.accept_feas_tol and quality <= opts.accept_tol:
            status = Status.OPTIMAL
    return _IpmResult(X, y, S, status, it, gap, pinf, dinf)


def _free_coordinates(problem: LiftedProblem) -> np.ndarray:
    used = np.zeros(problem.n + 1, dtype=bool)
    used[problem.anchor] = True
    for c in problem.constraints:
        used |= np.any(c.Q != 0.0, axis=0)
    return ~used


def solve_relaxed(problem: LiftedProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Solve the rank-relaxed program.

    Coordinates that appear in no constraint (the translations, in the
    two-agent problem) enter the cost only; when their cost block is
    positive definite they are minimised out in closed form first, which
    leaves an equivalent and better conditioned program over the remaining
    coordinates.  The returned ``X`` is always the full lifted matrix.
    """
    opts = opts or SolverOptions()
    P = problem.P
    N = P.shape[0]
    free = _free_coordinates(problem)
    kept = np.flatnonzero(~free)
    F = None
    if free.any():
        Pff = P[np.ix_(free, free)]
        ev = np.linalg.eigvalsh(Pff)
        if ev[0] > 1e-12 * max(ev[-1], 1e-300):
            # optimal free block given the rest: x_f = F x_c
            F = -np.linalg.solve(Pff, P[np.ix_(free, ~free)])
    if F is None:
        kept = np.arange(N)
        C = P
    else:
        C = P[np.ix_(kept, kept)] + P[np.ix_(kept, free)] @ F
    C = 0.5 * (C + C.T)

    sub = np.ix_(kept, kept)
    anchor_pos = int(np.flatnonzero(kept == problem.anchor)[0])
    E = np.zeros((len(kept), len(kept)))
    E[anchor_pos, anchor_pos] = 1.0
    mats = np.array([c.Q[sub] for c in problem.constraints] + [E])
    rhs = np.zeros(len(mats))
    rhs[-1] = 1.0
    A, b = _orthonormalise(mats, rhs)

    c_scale = max(np.linalg.norm(C), 1e-300)
    res = _ipm(C / c_scale, A, b, opts)

    Xc = 0.5 * (res.X + res.X.T)
    if F is None:
        X = Xc
    else:
        X = np.zeros((N, N))
        X[sub] = Xc
        X[np.ix_(free, kept)] = F @ Xc
        X[np.ix_(kept, free)] = (F @ Xc).T
        X[np.ix_(free, free)] = F @ Xc @ F.T
    X = 0.5 * (X + X.T)

    resid = np.array([abs(np.vdot(c.Q, X)) for c in problem.constraints])
    s = np.linalg.svd(X, compute_uv=False)
    ratio = float(s[1] / s[0]) if s[0] > 0 else np.nan
    return SdpSolution(
        X=X,
        objective=float(np.vdot(P, X)),
        feasibility_residuals=resid,
        anchor_residual=float(abs(X[problem.anchor, problem.anchor] - 1.0)),
        rank_ratio=ratio,
        iterations=res.iterations,
        status=res.status,
        gap=res.gap * c_scale,
        primal_infeasibility=res.pinf,
        dual_infeasibility=res.dinf,
    )


# --------------------------------------------------------------------------
# rank-one extraction


def extract_psi(sol: SdpSolution | np.ndarray, anchor: int | None = None) -> Extraction:
    """Best rank-one approximation of ``X`` read back as ``psi``.

    The leading singular vector is rescaled so that its anchor entry is -1.
    When the two leading singular values agree to ``1e-6`` relative a
    :class:`DegenerateTopWarning` is issued and both candidate vectors are
    returned in ``candidates``.
    """
    X = sol.X if isinstance(sol, SdpSolution) else np.asarray(sol, dtype=float)
    if anchor is None:
        anchor = X.shape[0] - 1
    u, s, _ = np.linalg.svd(0.5 * (X + X.T))
    ratio = float(s[1] / s[0]) if s[0] > 0 else np.nan

    def read(vec):
        a = vec[anchor]
        if abs(a) < 1e-300:
            return np.full(len(vec) - 1, np.nan)
        return np.delete(-vec / a, anchor)

    psi = read(u[:, 0])
    candidates = [psi]
    if s[0] > 0 and s[1] >= (1.0 - DEGENERATE_TOP_RTOL) * s[0]:
        warnings.warn("two leading singular values coincide; extraction ambiguous", DegenerateTopWarning, stacklevel=2)
        candidates.append(read(u[:, 1]))
    return Extraction(psi, ratio, s, candidates)
