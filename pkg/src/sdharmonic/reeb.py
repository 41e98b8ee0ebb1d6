"""Contact forms on the boundary S^1 x S^2 and their Reeb dynamics.

The Reeb field is obtained pointwise: restrict d(lambda) to the tangent
space of S^1 x S^2 in an orthonormal frame, take the kernel of the
resulting 3x3 antisymmetric matrix and scale it so that lambda(X) = 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import ring as R
from .acs import omega_matrix
from .exceptions import (
    DriftExceededError,
    OffSphereError,
    RankDeficiencyError,
    SDHarmonicError,
    StepUnderflowError,
)
from .forms import GLUE_MAP, AffineChartMap, DiffForm, ext_d, pullback_affine, wedge
from .models import omega_A, volume_density
from .ring import ChartPoint, RingElement

log = logging.getLogger(__name__)

__all__ = [
    "ContactModel",
    "OrbitRecord",
    "RotationNumbers",
    "CensusEntry",
    "make_contact",
    "contact_lambda",
    "contact_volume",
    "expected_contact_volume",
    "positivity_certificate",
    "reeb_at",
    "reeb_batch",
    "reeb_normalizer",
    "integrate_orbit",
    "rotation_numbers",
    "closure_ratio",
    "orbit_census",
    "return_map_linearization",
    "reeb_direction_deviation",
    "CLOSED",
    "QUASI_PERIODIC",
    "UNDETERMINED",
    "SINGLE",
    "DOUBLED",
]

CLOSED = "Closed"
QUASI_PERIODIC = "QuasiPeriodic"
UNDETERMINED = "Undetermined"
SINGLE = "Single"
DOUBLED = "Doubled"

_DECK = np.array([1.0, -1.0, -1.0])
_TWO_PI = 2 * math.pi


def contact_lambda() -> DiffForm:
    """-(1/2)(x1^2 + x2^2 - 2 x3^2) dtheta + x2 x3 dx1 - x1 x3 dx2."""
    X1, X2, X3 = R.X1, R.X2, R.X3
    return DiffForm(1, {
        (0,): Fraction(-1, 2) * (X1 ** 2 + X2 ** 2 - 2 * X3 ** 2),
        (1,): X2 * X3,
        (2,): -X1 * X3,
    })


class ContactModel:
    """A contact 1-form on S^1 x D^3 with its differential and optional deck map."""

    def __init__(self, kind: str, lam: DiffForm, omega: DiffForm, deck: AffineChartMap | None = None):
        self.kind = kind
        self.lam = lam
        self.omega = omega
        self.deck = deck
        # compiled scalar evaluators for the hot loop
        self._lam_fns = [lam[(i,)]._compiled(False) for i in range(4)]
        A = omega_matrix(omega).entries
        self._w_fns = {(i, j): A[i][j]._compiled(False) for i in range(4) for j in range(i + 1, 4)}

    @property
    def glued(self) -> bool:
        return self.deck is not None

    def __repr__(self):
        return f"ContactModel({self.kind!r})"


def make_contact(kind: str = "A") -> ContactModel:
    kind = {"B": "B-glued", "B_glued": "B-glued"}.get(kind, kind)
    if kind not in ("A", "B-glued"):
        raise ValueError(f"unknown contact model {kind!r}")
    lam = contact_lambda()
    w = omega_A()
    if ext_d(lam) != w:
        raise SDHarmonicError("d(lambda) differs from the model 2-form")
    deck = None
    if kind == "B-glued":
        deck = GLUE_MAP
        if pullback_affine(deck, lam) != lam or pullback_affine(deck, w) != w:
            raise SDHarmonicError("glueing map does not preserve the contact data")
    return ContactModel(kind, lam, w, deck)


# -- contact condition ------------------------------------------------------
def contact_volume(model: ContactModel) -> RingElement:
    """Coefficient of dtheta dx1 dx2 dx3 in (sum x_i dx_i) ^ lambda ^ d(lambda)."""
    radial = DiffForm(1, {(1,): R.X1, (2,): R.X2, (3,): R.X3})
    return wedge(wedge(radial, model.lam), ext_d(model.lam))[(0, 1, 2, 3)]


def expected_contact_volume() -> RingElement:
    """(1/2)(x1^2 + x2^2)(x1^2 + x2^2 + 2 x3^2) + 2 x3^4."""
    rho = R.X1 ** 2 + R.X2 ** 2
    return Fraction(1, 2) * rho * (rho + 2 * R.X3 ** 2) + 2 * R.X3 ** 4


def positivity_certificate(e: RingElement):
    """Write e as sum c_ab (x1^2 + x2^2)^a (x3^2)^b with every c_ab > 0.

    Returns the list of (c, a, b) or None if no such representation exists.
    The certificate proves e > 0 off x = 0 when it also contains a pure
    (x1^2 + x2^2)^a term and a pure (x3^2)^b term.
    """
    rho = R.X1 ** 2 + R.X2 ** 2
    rest = e
    cert = []
    while not rest.is_zero():
        # leading term: largest x1 power, then x3 power
        key, c = max(rest.items, key=lambda kc: (kc[0][0], kc[0][2], -kc[0][1]))
        a1, a2, a3, k, kind, m = key
        if k or kind or a2 or a1 % 2 or a3 % 2:
            return None
        a, b = a1 // 2, a3 // 2
        cert.append((c, a, b))
        rest = rest - c * rho ** a * R.X3 ** (2 * b)
    if any(c <= 0 for c, _, _ in cert):
        return None
    if not any(b == 0 and a > 0 for _, a, b in cert) or not any(a == 0 and b > 0 for _, a, b in cert):
        return None
    return sorted(cert, key=lambda t: (t[1], t[2]))


# -- Reeb field -------------------------------------------------------------
def _frame(x1, x2, x3):
    """Orthonormal u, w spanning the tangent plane of S^2 at x."""
    ax = min(range(3), key=lambda i: abs((x1, x2, x3)[i]))
    e = [0.0, 0.0, 0.0]
    e[ax] = 1.0
    d = e[0] * x1 + e[1] * x2 + e[2] * x3
    u = [e[0] - d * x1, e[1] - d * x2, e[2] - d * x3]
    n = math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    u = [u[0] / n, u[1] / n, u[2] / n]
    w = [x2 * u[2] - x3 * u[1], x3 * u[0] - x1 * u[2], x1 * u[1] - x2 * u[0]]
    return u, w


def _reeb_scalar(model: ContactModel, th, x1, x2, x3, tol=1e-12):
    wf = model._w_fns
    a01 = wf[(0, 1)](th, x1, x2, x3)
    a02 = wf[(0, 2)](th, x1, x2, x3)
    a03 = wf[(0, 3)](th, x1, x2, x3)
    a12 = wf[(1, 2)](th, x1, x2, x3)
    a13 = wf[(1, 3)](th, x1, x2, x3)
    a23 = wf[(2, 3)](th, x1, x2, x3)
    u, w = _frame(x1, x2, x3)
    b01 = a01 * u[0] + a02 * u[1] + a03 * u[2]
    b02 = a01 * w[0] + a02 * w[1] + a03 * w[2]
    # u^T A_xx w with A_xx antisymmetric
    b12 = (a12 * (u[0] * w[1] - u[1] * w[0]) + a13 * (u[0] * w[2] - u[2] * w[0])
           + a23 * (u[1] * w[2] - u[2] * w[1]))
    k0, k1, k2 = b12, -b02, b01
    if k0 * k0 + k1 * k1 + k2 * k2 < tol * tol:
        raise RankDeficiencyError(f"restricted 2-form vanishes at {(th, x1, x2, x3)}")
    v1 = k1 * u[0] + k2 * w[0]
    v2 = k1 * u[1] + k2 * w[1]
    v3 = k1 * u[2] + k2 * w[2]
    lf = model._lam_fns
    s = (lf[0](th, x1, x2, x3) * k0 + lf[1](th, x1, x2, x3) * v1
         + lf[2](th, x1, x2, x3) * v2 + lf[3](th, x1, x2, x3) * v3)
    if abs(s) < tol:
        raise RankDeficiencyError(f"lambda vanishes on the characteristic line at {(th, x1, x2, x3)}")
    return k0 / s, v1 / s, v2 / s, v3 / s


def _check_sphere(x, tol=1e-12):
    n = math.fsum(float(v) * float(v) for v in x)
    if abs(n - 1.0) > 2 * tol:
        raise OffSphereError(f"|x| = {math.sqrt(n)!r} is not 1")


def reeb_at(model: ContactModel, p) -> np.ndarray:
    """Reeb vector (X_theta, X_1, X_2, X_3) at a point of S^1 x S^2."""
    if isinstance(p, ChartPoint):
        th, x = p.theta, p.x
    else:
        th, x = p[0], p[1:] if len(p) == 4 else p[1]
    _check_sphere(x)
    return np.array(_reeb_scalar(model, float(th), *map(float, x)))


def reeb_batch(model: ContactModel, theta: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Vectorized kernel solve for arrays of points; returns shape (n, 4)."""
    xs = np.asarray(xs, float)
    theta = np.asarray(theta, float)
    norms = np.einsum("ij,ij->i", xs, xs)
    if np.any(np.abs(norms - 1) > 2e-12):
        raise OffSphereError("points must lie on the unit sphere")
    A = omega_matrix(model.omega)
    Am = np.stack([np.stack([A.entries[i][j].evaluate(theta, xs[:, 0], xs[:, 1], xs[:, 2])
                             for j in range(4)], -1) for i in range(4)], -2)
    lam = model.lam.evaluate(theta, xs[:, 0], xs[:, 1], xs[:, 2])
    ax = np.argmin(np.abs(xs), axis=1)
    e = np.eye(3)[ax]
    u = e - np.einsum("ij,ij->i", e, xs)[:, None] * xs
    u /= np.linalg.norm(u, axis=1)[:, None]
    w = np.cross(xs, u)
    n = len(xs)
    E = np.zeros((n, 4, 3))
    E[:, 0, 0] = 1.0
    E[:, 1:, 1] = u
    E[:, 1:, 2] = w
    B = np.einsum("nia,nij,njb->nab", E, Am, E)
    k = np.stack([B[:, 1, 2], -B[:, 0, 2], B[:, 0, 1]], -1)
    if np.any(np.linalg.norm(k, axis=1) < 1e-12):
        raise RankDeficiencyError("restricted 2-form has rank < 2 somewhere")
    X = np.einsum("nia,na->ni", E, k)
    s = np.einsum("ni,ni->n", lam, X)
    if np.any(np.abs(s) < 1e-12):
        raise RankDeficiencyError("lambda vanishes on the characteristic line somewhere")
    return X / s[:, None]


def reeb_normalizer(model: ContactModel, x) -> float:
    """The scalar f with X = V / f, V = J(sum x_i d/dx_i) * |L| (unnormalized).

    For model A this is lambda(V) with V = (x1^2+x2^2-2x3^2, -3x2x3, 3x1x3, 0).
    """
    x = np.asarray(x, float)
    A = omega_matrix(model.omega).evaluate(0.0, *x)
    V = A @ np.concatenate([[0.0], x])
    lam = model.lam.evaluate(0.0, *x)
    return float(lam @ V)


def reeb_direction_deviation(model: ContactModel, p: ChartPoint) -> float:
    """sin of the angle between the Reeb field and J(sum x_i d/dx_i)."""
    from .acs import acs_at

    X = reeb_at(model, p)
    J = acs_at(model.omega, p).J
    Y = J @ np.concatenate([[0.0], p.x])
    Xh = X / np.linalg.norm(X)
    Yh = Y / np.linalg.norm(Y)
    return float(np.linalg.norm(Yh - (Xh @ Yh) * Xh))


# -- orbits -----------------------------------------------------------------
@dataclass
class OrbitRecord:
    start: ChartPoint
    r: float
    drift: float
    period: float | None
    closed: str
    multiplicity: str
    returns: int = 0
    steps: int = 0
    events: list = field(default_factory=list)
    trajectory: np.ndarray | None = None
    returns_A: int | None = None  # section returns until the unglued orbit closes

    def to_json(self) -> dict:
        return {
            "start": {"theta": self.start.theta, "x": list(self.start.x)},
            "r": self.r,
            "drift": self.drift,
            "period": self.period,
            "verdict": self.closed,
            "multiplicity": self.multiplicity,
            "returns": self.returns,
            "steps": self.steps,
            "deck_events": len(self.events),
        }


def _rk4(model, th, x1, x2, x3, h):
    f = _reeb_scalar
    k1 = f(model, th, x1, x2, x3)
    hh = 0.5 * h
    k2 = f(model, th + hh * k1[0], x1 + hh * k1[1], x2 + hh * k1[2], x3 + hh * k1[3])
    k3 = f(model, th + hh * k2[0], x1 + hh * k2[1], x2 + hh * k2[2], x3 + hh * k2[3])
    k4 = f(model, th + h * k3[0], x1 + h * k3[1], x2 + h * k3[2], x3 + h * k3[3])
    s = h / 6.0
    th = th + s * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    x1 = x1 + s * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    x2 = x2 + s * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    x3 = x3 + s * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    n = math.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    return th, x1 / n, x2 / n, x3 / n


def _refine_crossing(model, th, x, level, h, rate):
    """Substep s in [0, h] such that the lifted theta reaches ``level``."""
    s = min(max((level - th) / rate, 0.0), h)
    for _ in range(6):
        t2, *_ = _rk4(model, th, *x, s)
        ds = (level - t2) / rate
        s += ds
        if abs(ds) < 1e-15:
            break
    t2, a, b, c = _rk4(model, th, *x, s)
    return s, (a, b, c)


def _refine_minimum(model, ta, tha, xa, d2s, h, x0):
    """Time near ta + h minimizing |x(t) - x0|^2: parabola, then Newton steps."""
    d0, d1, d2 = d2s
    denom = d0 - 2 * d1 + d2
    tau = (1 + (0.5 * (d0 - d2) / denom if denom > 0 else 0.0)) * h
    for _ in range(4):
        th, *xm = _rk4(model, tha, *xa, tau)
        X = _reeb_scalar(model, th, *xm)
        g = sum((xm[i] - x0[i]) * X[i + 1] for i in range(3))
        speed2 = X[1] ** 2 + X[2] ** 2 + X[3] ** 2
        if speed2 == 0:
            break
        tau -= g / speed2
    return ta + tau


def integrate_orbit(
    model: ContactModel,
    p0,
    T: float = 20.0,
    h: float = 1e-3,
    closure_tol: float = 1e-6,
    drift_limit: float = 1e-6,
    record_every: int = 0,
    stop_at_closure: bool = False,
) -> OrbitRecord:
    """RK4 integration of the Reeb flow with sphere projection and closure detection.

    Closure is tested at returns to the section theta = theta0 (or by full-state
    proximity when the orbit has no theta motion).  For the glued model the
    deck map is applied whenever theta leaves [0, 2pi), and a return counts as
    a closure when the quotient point agrees with the start.
    """
    if h < 1e-12 or T <= 0:
        raise StepUnderflowError(f"step {h} too small or horizon {T} not positive")
    start = p0 if isinstance(p0, ChartPoint) else ChartPoint(p0[0], p0[1])
    _check_sphere(start.x, 1e-9)
    x0 = np.array(start.x) / np.linalg.norm(start.x)
    th0 = start.theta
    glued = model.glued
    xq = tuple(x0)  # quotient state
    thq = th0
    xa = tuple(x0)  # lifted (unglued) state
    thl = th0
    parity = 0
    rho0, z0 = x0[0] ** 2 + x0[1] ** 2, x0[2]
    drift = 0.0
    rate0 = _reeb_scalar(model, th0, *x0)[0]
    theta_motion = abs(rate0) > 1e-12
    direction = 1.0 if rate0 > 0 else -1.0
    n_ret = 0
    n_closed_A = None
    closed_returns = None
    period = None
    events = []
    traj = [] if record_every else None
    nsteps = int(math.ceil(T / h - 1e-9))
    # proximity bookkeeping
    left = False
    hist = [(0.0, th0, tuple(x0), 0.0)]
    t = 0.0
    if traj is not None:
        traj.append((0.0, thq, *xq))
    for step in range(1, nsteps + 1):
        old_l, old_xa = thl, xa
        nth, *nx = _rk4(model, thq, *xq, h)
        thl += nth - thq
        thq, xq = nth, tuple(nx)
        if glued:
            while thq >= _TWO_PI or thq < 0:
                sgn = 1 if thq >= _TWO_PI else -1
                thq -= sgn * _TWO_PI
                xq = (xq[0], -xq[1], -xq[2])
                parity ^= 1
                events.append((step * h, sgn))
                log.debug("deck crossing at t=%.6f (direction %+d)", step * h, sgn)
            xa = (xq[0], -xq[1], -xq[2]) if parity else xq
        else:
            xa = xq
        t = step * h
        if glued:
            d = max(abs(xq[0] ** 2 + xq[1] ** 2 - rho0), abs(abs(xq[2]) - abs(z0)))
        else:
            d = max(abs(xq[0] ** 2 + xq[1] ** 2 - rho0), abs(xq[2] - z0))
        drift = max(drift, d)
        if drift > drift_limit:
            raise DriftExceededError(f"conserved quantities drifted by {drift:.3g} at t={t:.3f}")
        if traj is not None and step % record_every == 0:
            traj.append((t, thq, *xq))
        if period is not None and stop_at_closure:
            continue
        if theta_motion:
            level = th0 + direction * _TWO_PI * (n_ret + 1)
            if direction * (thl - level) >= 0:
                n_ret += 1
                rate = _reeb_scalar(model, old_l, *old_xa)[0]
                s, xc = _refine_crossing(model, old_l, old_xa, level, h, rate)
                xc = np.array(xc)
                tc = t - h + s
                if n_closed_A is None and np.linalg.norm(xc - x0) < closure_tol:
                    n_closed_A = n_ret
                    if not glued and period is None:
                        period = tc
                if glued and period is None:
                    xb = xc * (_DECK if n_ret % 2 else 1.0)
                    if np.linalg.norm(xb - x0) < closure_tol:
                        period = tc
                        closed_returns = n_ret
                if period is not None and stop_at_closure:
                    continue
        else:
            dist = float(np.linalg.norm(np.array(xa) - x0))
            if dist > 1e3 * closure_tol:
                left = True
            hist.append((t, thl, xa, dist * dist))
            if len(hist) > 3:
                hist.pop(0)
            if left and period is None and len(hist) == 3:
                (ta, tha, xa_a, d0), (_, _, _, d1), (_, _, _, d2) = hist
                if d1 < d0 and d1 <= d2 and d1 < 10 * h:
                    tm = _refine_minimum(model, ta, tha, xa_a, (d0, d1, d2), h, x0)
                    _, *xm = _rk4(model, tha, *xa_a, tm - ta)
                    if np.linalg.norm(np.array(xm) - x0) < closure_tol:
                        period = tm
                        n_closed_A = 1
    if period is not None:
        verdict = CLOSED
    elif n_ret >= 2:
        verdict = QUASI_PERIODIC
    else:
        verdict = UNDETERMINED
    multiplicity = SINGLE
    returns = n_ret
    if glued and period is not None and theta_motion:
        returns = closed_returns
        if n_closed_A is not None and n_closed_A < closed_returns:
            multiplicity = DOUBLED
    elif period is not None and theta_motion:
        returns = n_closed_A
    trajectory = np.array(traj) if traj is not None else None
    return OrbitRecord(start, float(z0), drift, period, verdict, multiplicity, returns, nsteps,
                       events, trajectory, n_closed_A)


# -- rotation numbers and census -------------------------------------------
@dataclass(frozen=True)
class RotationNumbers:
    r: float
    R1: float  # angular rate of (x1, x2)
    R2: float  # theta rate
    degenerate: bool = False  # r = +-1: the x1x2 circle collapses to a point
    theta_independent: bool = True


def rotation_numbers(model: ContactModel, r: float, n_theta: int = 4) -> RotationNumbers:
    if abs(r) > 1 + 1e-12:
        raise ValueError("|r| must be at most 1")
    r = max(-1.0, min(1.0, float(r)))
    s = math.sqrt(max(0.0, 1 - r * r))
    rates = []
    for k in range(n_theta):
        th = _TWO_PI * k / n_theta
        X = _reeb_scalar(model, th, s, 0.0, r)
        R2 = X[0]
        R1 = X[2] / s if s > 0 else 0.0  # at (s, 0, r): (x1 X2 - x2 X1) / rho
        rates.append((R1, R2))
    rates = np.array(rates)
    indep = bool(np.all(np.abs(rates - rates[0]) <= 1e-12 * (1 + np.abs(rates[0]))))
    return RotationNumbers(r, float(rates[0, 0]), float(rates[0, 1]), s == 0.0, indep)


def closure_ratio(rn: RotationNumbers, tol: float = 1e-9, max_den: int = 1000):
    """(closed, Fraction p/q ~ R2/R1 or None).  R1 = 0 or R2 = 0 count as closed."""
    if rn.degenerate or abs(rn.R1) <= tol:
        return True, None
    if abs(rn.R2) <= tol:
        return True, Fraction(0)
    ratio = rn.R2 / rn.R1
    frac = Fraction(ratio).limit_denominator(max_den)
    return abs(float(frac) - ratio) <= tol * max(1.0, abs(ratio)), frac


@dataclass
class CensusEntry:
    r: float
    phase: float
    verdict: str
    multiplicity: str
    R1: float
    R2: float
    period: float | None
    verified: bool | None = None

    @property
    def point(self) -> tuple:
        s = math.sqrt(max(0.0, 1 - self.r ** 2))
        return (s * math.cos(self.phase), s * math.sin(self.phase), self.r)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "phase": self.phase,
            "point": list(self.point),
            "verdict": self.verdict,
            "multiplicity": self.multiplicity,
            "R1": self.R1,
            "R2": self.R2,
            "period": self.period,
            "verified": self.verified,
        }


_EQUATOR_PHASES = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi, 5 * math.pi / 4, 3 * math.pi / 2)


def orbit_census(
    model: ContactModel,
    r_grid: int | Sequence[float] = 101,
    tol: float = 1e-9,
    verify: bool = True,
    h: float = 1e-3,
) -> list[CensusEntry]:
    """Closed-orbit census over x3 = r levels.

    Verdicts come from the rotation numbers; the special loci (poles and the
    equator, plus every listed equatorial phase for the glued model) are
    re-derived by integrating the orbit when ``verify`` is set.
    """
    grid = np.linspace(-1.0, 1.0, r_grid) if isinstance(r_grid, int) else np.asarray(r_grid, float)
    out = []
    for r in grid:
        r = float(r)
        rn = rotation_numbers(model, r)
        closed, frac = closure_ratio(rn, tol)
        special = rn.degenerate or abs(r) <= tol
        phases = _EQUATOR_PHASES if (model.glued and abs(r) <= tol) else (0.0,)
        for ph in phases:
            period = None
            mult = SINGLE
            if closed:
                if rn.degenerate or abs(rn.R1) <= tol:
                    period, turns = _TWO_PI / abs(rn.R2), 1
                elif frac == 0:
                    period, turns = _TWO_PI / abs(rn.R1), 0
                else:
                    turns = abs(frac.numerator)
                    period = _TWO_PI * turns / abs(rn.R2)
                if model.glued and turns:
                    if abs(r) <= tol:
                        doubled = abs(math.sin(ph)) > 1e-12
                    elif rn.degenerate:
                        doubled = True
                    else:
                        doubled = turns % 2 == 1
                    if doubled:
                        mult = DOUBLED
                        period *= 2
            entry = CensusEntry(r, ph, CLOSED if closed else QUASI_PERIODIC, mult, rn.R1, rn.R2, period)
            if verify and special and closed:
                rec = integrate_orbit(model, ChartPoint(0.0, entry.point), T=1.1 * period + 10 * h, h=h,
                                      stop_at_closure=True)
                entry.verified = (
                    rec.closed == CLOSED
                    and rec.multiplicity == mult
                    and abs(rec.period - period) <= 1e-6
                )
            out.append(entry)
    return out


def return_map_linearization(model: ContactModel, p0, eps: float = 1e-6, h: float = 1e-3) -> np.ndarray:
    """2x2 Jacobian of the first return map to theta = theta0, in a tangent frame at x0.

    Raw data only; for the glued model the deck map is part of the return.
    """
    start = p0 if isinstance(p0, ChartPoint) else ChartPoint(p0[0], p0[1])
    x0 = np.array(start.x)
    rate = _reeb_scalar(model, start.theta, *x0)[0]
    if abs(rate) < 1e-12:
        raise SDHarmonicError("orbit has no theta motion; the section is not transverse")
    direction = 1.0 if rate > 0 else -1.0
    level = start.theta + direction * _TWO_PI
    u, w = _frame(*x0)
    u, w = np.array(u), np.array(w)

    def first_return(x):
        th, xs = start.theta, tuple(x)
        for _ in range(int(10 * _TWO_PI / (abs(rate) * h)) + 10):
            nth, *nx = _rk4(model, th, *xs, h)
            if direction * (nth - level) >= 0:
                r = _reeb_scalar(model, th, *xs)[0]
                _, xc = _refine_crossing(model, th, xs, level, h, r)
                xc = np.array(xc)
                return xc * _DECK if model.glued else xc
            th, xs = nth, tuple(nx)
        raise SDHarmonicError("no return to the section")

    def chart(v):
        y = x0 + v[0] * u + v[1] * w
        return y / np.linalg.norm(y)

    J = np.zeros((2, 2))
    for k, e in enumerate(np.eye(2)):
        fp = first_return(chart(eps * e))
        fm = first_return(chart(-eps * e))
        d = (fp - fm) / (2 * eps)
        J[:, k] = [d @ u, d @ w]
    return J
