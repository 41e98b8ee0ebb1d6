"""Compatible triple (omega, conformal metric, J) off the zero circle.

For a self-dual 2-form the matrix A_ij = omega(e_i, e_j) satisfies
A @ A = -lambda^2 I, where (1/2) omega ^ omega = lambda^2 vol.  With the
rescaled metric g~ = lambda * g the defining relation g~(u, v) = omega(Ju, v)
gives J = A / lambda acting on column vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ring as R
from .exceptions import DegreeError, NegativeDensityError, OnCoreError, RankDeficiencyError
from .forms import DiffForm
from .models import volume_density
from .ring import ChartPoint, RingElement

__all__ = [
    "OmegaMatrix",
    "AcsSample",
    "omega_matrix",
    "conformal_factor",
    "acs_at",
    "solve_J",
    "ON_CORE_EPS",
]

ON_CORE_EPS = 1e-9


class OmegaMatrix:
    """Exact 4x4 antisymmetric matrix of ring elements, basis (theta, x1, x2, x3)."""

    def __init__(self, entries):
        self.entries = tuple(tuple(v if isinstance(v, RingElement) else R.const(v) for v in row) for row in entries)

    def is_antisymmetric(self) -> bool:
        return all(self.entries[i][j] == -self.entries[j][i] for i in range(4) for j in range(4))

    def __matmul__(self, other: "OmegaMatrix") -> "OmegaMatrix":
        a, b = self.entries, other.entries
        return OmegaMatrix(
            tuple(tuple(sum((a[i][k] * b[k][j] for k in range(4)), R.ZERO) for j in range(4)) for i in range(4))
        )

    def square(self) -> "OmegaMatrix":
        return self @ self

    def is_scalar(self, c: RingElement) -> bool:
        """True if the matrix equals c * I exactly."""
        return all(self.entries[i][j] == (c if i == j else R.ZERO) for i in range(4) for j in range(4))

    def __call__(self, point: ChartPoint) -> np.ndarray:
        return self.evaluate(point.theta, *point.x)

    def evaluate(self, theta, x1, x2, x3) -> np.ndarray:
        return np.array([[v.evaluate(theta, x1, x2, x3) for v in row] for row in self.entries])

    def __eq__(self, other):
        if not isinstance(other, OmegaMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __str__(self):
        return "[" + ",\n ".join("[" + ", ".join(str(v) for v in row) + "]" for row in self.entries) + "]"


def omega_matrix(w: DiffForm) -> OmegaMatrix:
    if w.degree != 2:
        raise DegreeError("omega_matrix needs a 2-form")
    return OmegaMatrix(tuple(tuple(w[(i, j)] if i != j else R.ZERO for j in range(4)) for i in range(4)))


def conformal_factor(w: DiffForm, p: ChartPoint, tol: float = 1e-12) -> float:
    """Positive root lambda(p) of (1/2) w ^ w = lambda^2 vol."""
    d = volume_density(w).evaluate(p.theta, *p.x)
    if d < -tol:
        raise NegativeDensityError(f"volume density {d} < 0: input is not self-dual")
    return math.sqrt(max(d, 0.0))


@dataclass
class AcsSample:
    point: ChartPoint
    lam: float
    J: np.ndarray
    A: np.ndarray

    def metric(self) -> np.ndarray:
        """The rescaled metric g~ = lambda * (flat metric)."""
        return self.lam * np.eye(4)

    def omega(self, u, v) -> float:
        return float(np.asarray(u) @ self.A @ np.asarray(v))


def solve_J(A: np.ndarray, lam: float) -> np.ndarray:
    """Recover J from g~(u, v) = omega(J u, v) for all u, v by a 16x16 linear solve.

    The relation reads J^T A = lam I; in vec form (A^T kron I) vec(J^T) = vec(lam I).
    Raises if the system is not of full rank, which would break uniqueness.
    """
    M = np.kron(np.eye(4), A.T)
    rank = np.linalg.matrix_rank(M)
    if rank < 16:
        raise RankDeficiencyError(f"defining relation has rank {rank} < 16")
    # row-major vec: (J^T A)_{ij} = sum_k JT_{ik} A_{kj}
    rhs = (lam * np.eye(4)).reshape(-1)
    JT = np.linalg.solve(M, rhs).reshape(4, 4)
    return JT.T


def acs_at(w: DiffForm, p: ChartPoint, eps: float = ON_CORE_EPS) -> AcsSample:
    lam = conformal_factor(w, p)
    if lam < eps:
        raise OnCoreError(f"J is undefined on the zero circle (lambda = {lam:.3g})")
    A = omega_matrix(w).evaluate(p.theta, *p.x)
    return AcsSample(p, lam, A / lam, A)
