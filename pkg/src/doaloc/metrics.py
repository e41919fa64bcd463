"""Error metrics for estimated frame alignments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rotation_error(R1, R2) -> float:
    """Geodesic distance on SO(3), in radians, within ``[0, pi]``."""
    M = np.asarray(R1).T @ np.asarray(R2)
    # atan2 of the skew and symmetric parts stays accurate near 0 and pi
    s = 0.5 * np.linalg.norm([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])
    c = 0.5 * (np.trace(M) - 1.0)
    return float(np.arctan2(s, c))


def reconstruct_positions(R, t, p_local) -> np.ndarray:
    """Map observer INS-frame positions to the global frame, ``R^T (p - t)``."""
    return (np.asarray(p_local, dtype=float) - np.asarray(t, dtype=float)) @ np.asarray(R)


def mean_separation(p_a, p_b_global) -> float:
    return float(np.mean(np.linalg.norm(np.asarray(p_a) - np.asarray(p_b_global), axis=1)))


def position_error(R, t, p_local, p_global_true, p_a) -> float:
    """Mean reconstruction error normalised by the mean inter-agent distance."""
    rec = reconstruct_positions(R, t, p_local)
    err = np.linalg.norm(rec - np.asarray(p_global_true), axis=1)
    return float(np.mean(err) / mean_separation(p_a, p_global_true))


@dataclass(frozen=True)
class ErrorReport:
    rotation_error_rad: float
    position_error: float
    reconstructed: np.ndarray

    @property
    def rotation_error_deg(self) -> float:
        return float(np.rad2deg(self.rotation_error_rad))


def error_report(R, t, R_true, p_local, p_global_true, p_a) -> ErrorReport:
    return ErrorReport(
        rotation_error(R, R_true),
        position_error(R, t, p_local, p_global_true, p_a),
        reconstruct_positions(R, t, p_local),
    )
