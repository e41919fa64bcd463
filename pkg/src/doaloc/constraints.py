"""Quadratic equality constraints forcing a 3x3 block of psi onto SO(3).

Each constraint ``c(psi) = 0`` is stored as a symmetric matrix ``Q`` of
size ``n + 1`` such that ``c(psi) = x.T @ Q @ x`` with ``x = [psi, -1]``,
i.e. ``<Q, X> = c(psi)`` for the lifted ``X = x x.T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Family(enum.Enum):
    ROW_ORTHO = "row_ortho"  # R R^T = I
    COL_ORTHO = "col_ortho"  # R^T R = I
    ADJUGATE_COL1 = "adjugate_col1"  # R = adj(R)^T, first column
    ADJUGATE_COL2 = "adjugate_col2"
    ADJUGATE_COL3 = "adjugate_col3"
    COMPOSITION = "composition"  # chained rotations agree
    TRANSLATION = "translation"  # chained translations agree


INDEPENDENT_FAMILIES = frozenset({Family.ROW_ORTHO})


@dataclass(frozen=True)
class QuadraticConstraint:
    Q: np.ndarray
    label: str
    family: Family

    def evaluate(self, psi: np.ndarray) -> float:
        x = np.append(np.asarray(psi, dtype=float), -1.0)
        return float(x @ self.Q @ x)


def lifted_vector(psi: np.ndarray) -> np.ndarray:
    return np.append(np.asarray(psi, dtype=float), -1.0)


def lift_point(psi: np.ndarray) -> np.ndarray:
    x = lifted_vector(psi)
    return np.outer(x, x)


class _Poly:
    """Accumulates quadratic, linear and constant terms of one constraint."""

    def __init__(self, n: int):
        self.n = n
        self.Q = np.zeros((n + 1, n + 1))

    def quad(self, i: int, j: int, c: float = 1.0):
        self.Q[i, j] += 0.5 * c
        self.Q[j, i] += 0.5 * c
        return self

    def lin(self, i: int, c: float = 1.0):
        # x[n] = -1 so the linear coefficient enters with a flipped sign
        self.Q[i, self.n] -= 0.5 * c
        self.Q[self.n, i] -= 0.5 * c
        return self

    def const(self, c: float):
        self.Q[self.n, self.n] += c
        return self


def _r(offset: int, i: int, j: int) -> int:
    return offset + 3 * i + j


_PAIRS = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def rotation_block_constraints(n: int, offset: int = 0, tag: str = "") -> list[QuadraticConstraint]:
    """The 21 constraints on the row-major rotation block at ``psi[offset:offset+9]``."""
    out = []
    idx = 1
    for transpose, fam in ((False, Family.ROW_ORTHO), (True, Family.COL_ORTHO)):
        for i, j in _PAIRS:
            p = _Poly(n)
            for k in range(3):
                if transpose:
                    p.quad(_r(offset, k, i), _r(offset, k, j))
                else:
                    p.quad(_r(offset, i, k), _r(offset, j, k))
            if i == j:
                p.const(-1.0)
            out.append(QuadraticConstraint(p.Q, f"{tag}C{idx}", fam))
            idx += 1
    fams = (Family.ADJUGATE_COL1, Family.ADJUGATE_COL2, Family.ADJUGATE_COL3)
    for j in range(3):
        for i in range(3):
            # r_ij - cofactor_ij
            p = _Poly(n).lin(_r(offset, i, j))
            i1, i2 = (i + 1) % 3, (i + 2) % 3
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            p.quad(_r(offset, i1, j1), _r(offset, i2, j2), -1.0)
            p.quad(_r(offset, i1, j2), _r(offset, i2, j1), 1.0)
            out.append(QuadraticConstraint(p.Q, f"{tag}C{idx}", fams[j]))
            idx += 1
    return out


def rotation_constraints(constraint_set: str = "full") -> list[QuadraticConstraint]:
    """Constraints on the 12-vector ``psi``.

    ``"full"`` returns all 21 (6 row-orthogonality, 6 column-orthogonality,
    9 adjugate); ``"independent-only"`` keeps the 6 row-orthogonality ones.
    """
    cons = rotation_block_constraints(12)
    return select(cons, constraint_set)


def select(cons: list[QuadraticConstraint], constraint_set: str) -> list[QuadraticConstraint]:
    if constraint_set == "full":
        return cons
    if constraint_set == "independent-only":
        return [c for c in cons if c.family in INDEPENDENT_FAMILIES]
    raise ValueError(f"unknown constraint set {constraint_set!r}")


def evaluate_all(cons: list[QuadraticConstraint], psi: np.ndarray) -> np.ndarray:
    X = lift_point(psi)
    return np.array([np.vdot(c.Q, X) for c in cons])


def stacked_rank(cons: list[QuadraticConstraint], rtol: float = 1e-10) -> int:
    M = np.array([c.Q.ravel() for c in cons])
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * s[0]))
