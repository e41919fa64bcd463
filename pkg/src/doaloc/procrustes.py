"""Projection of a 3x3 matrix onto SO(3) (special orthogonal Procrustes)."""

from __future__ import annotations

import warnings

import numpy as np

from .errors import DegenerateSpectrumWarning


def closest_rotation(m: np.ndarray) -> np.ndarray:
    """Rotation minimising ``||R - m||_F`` over SO(3).

    With ``m = U S V^T``, returns ``U V^T`` when that has determinant +1 and
    otherwise ``U diag(1, 1, -1) V^T``, i.e. the column paired with the
    smallest singular value is flipped.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("expected a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(m)
    if s[0] == 0.0 or s[1] <= 1e-12 * s[0]:
        warnings.warn("singular spectrum; the closest rotation is not unique", DegenerateSpectrumWarning, stacklevel=2)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u = u.copy()
        u[:, 2] = -u[:, 2]
        r = u @ vt
    return r
