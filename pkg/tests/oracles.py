"""Reference implementations used only by the tests.

Each oracle is written independently of the package code it checks: DOA
vectors come from composing elementary rotations, rotation distances from
scipy's rotation-vector logarithm, the linear-system residual from an
explicit cross product, and alternative exact poses from a multi-start
nonlinear search on normalised direction residuals.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.spatial.transform import Rotation


def doa_vector(az: float, el: float) -> np.ndarray:
    """``Rz(az) Ry(-el)`` applied to the x axis."""
    return Rotation.from_euler("ZY", [az, -el]).apply([1.0, 0.0, 0.0])


def geodesic(R1, R2) -> float:
    return float(Rotation.from_matrix(np.asarray(R1).T @ np.asarray(R2)).magnitude())


def haar_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    return Rotation.random(n, random_state=rng).as_matrix()


def brute_procrustes(M: np.ndarray, rng: np.random.Generator, samples: int = 2000, restarts: int = 8) -> np.ndarray:
    """Closest rotation to ``M`` by dense sampling plus local refinement."""
    cands = haar_rotations(samples, rng)
    costs = np.linalg.norm(cands - M, axis=(1, 2))
    best = []
    for i in np.argsort(costs)[:restarts]:
        x0 = Rotation.from_matrix(cands[i]).as_rotvec()
        res = minimize(lambda w: np.linalg.norm(Rotation.from_rotvec(w).as_matrix() - M), x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        best.append((res.fun, Rotation.from_rotvec(res.x).as_matrix()))
    return min(best, key=lambda p: p[0])[1]


def cross_residual(psi, p_a, p_b, az, el) -> np.ndarray:
    """``(2K,)`` residual of the collinearity rows written as a cross product.

    With ``u = R p_a + t - p_b`` and ``q`` the DOA vector, the two rows of
    one epoch are the y component of ``q x u`` and minus its x component.
    """
    R, t = np.reshape(psi[:9], (3, 3)), np.asarray(psi[9:12])
    out = []
    for pa, pb, a, e in zip(p_a, p_b, az, el):
        c = np.cross(doa_vector(a, e), R @ pa + t - pb)
        out.extend([c[1], -c[0]])
    return np.array(out)


def direction_residual(R, t, p_a, p_b, az, el) -> np.ndarray:
    u = p_a @ R.T + t - p_b
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    q = np.array([doa_vector(a, e) for a, e in zip(az, el)])
    return (u - q).ravel()


def multi_start_exact_poses(m, rng: np.random.Generator, starts: int = 20, tol: float = 1e-9, bound: float = 3.0):
    """Poses reproducing every DOA of ``m`` exactly.

    Random rotations and translations seed a bounded trust-region search
    on the normalised direction residual; converged points with residual
    below ``tol`` are kept.  Translations are limited to ``bound`` times the
    largest coordinate, which excludes fits that only hold in the limit of
    infinite range.
    """
    scale = float(np.max(np.abs(np.vstack([m.p_a, m.p_b])))) or 1.0
    found = []
    for _ in range(starts):
        w0 = Rotation.random(random_state=rng).as_rotvec()
        t0 = rng.uniform(-2, 2, 3)

        def f(x):
            return direction_residual(Rotation.from_rotvec(x[:3]).as_matrix(), x[3:] * scale, m.p_a, m.p_b, m.azimuth, m.elevation)

        lo = [-np.inf] * 3 + [-bound] * 3
        hi = [np.inf] * 3 + [bound] * 3
        res = least_squares(f, np.concatenate([w0, t0]), bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        if np.max(np.abs(res.fun)) < tol:
            found.append((Rotation.from_rotvec(res.x[:3]).as_matrix(), res.x[3:] * scale))
    return found


def distinct(poses, rot_tol: float = 1e-3, trans_tol: float = 1e-3):
    """Greedy de-duplication by geodesic and relative translation distance."""
    out = []
    for R, t in poses:
        if all(geodesic(R, R2) > rot_tol or np.linalg.norm(t - t2) > trans_tol * max(1.0, np.linalg.norm(t2)) for R2, t2 in out):
            out.append((R, t))
    return out
