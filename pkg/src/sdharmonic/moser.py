"""Moser flow for families of 2-forms vanishing on the core circle.

Pipeline for a linear family w_t = w0 + t*beta:

1. a primitive eta~ of beta (cone operator in the D^3 factor),
2. the quadratic function f matching eta~ to first order along C,
3. eta = eta~ - d(chi * f) with a C^2 damping profile chi,
4. the field X_t with i_{X_t} w_t = -eta, integrated by RK4,
5. diagnostics: pullback error of the time-1 map and decay of X near C.

Step 4 uses -eta: with L_X w_t = d i_X w_t this makes d/dt(phi_t^* w_t) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import ring as R
from .exceptions import (
    ClassMismatchError,
    DegreeError,
    NonzeroLoopIntegralError,
    NotClosedError,
    SingularityError,
    StepUnderflowError,
)
from .forms import DiffForm, ext_d, pullback_affine
from .models import (
    ORIENTED,
    LocalModel,
    ModelSpec,
    classify_splitting,
    extract_L,
    make_model,
    omega_A,
    omega_B,
)
from .ring import RingElement

__all__ = [
    "DampingProfile",
    "Perturbation",
    "FormFamily",
    "QuadraturePrimitive",
    "CorrectedEta",
    "DecayFit",
    "FlowResult",
    "GraftReport",
    "primitive_homotopy",
    "loop_integral_check",
    "loop_integral_coefficient",
    "taylor_correction",
    "first_order_residual",
    "symmetry_relations",
    "corrected_eta",
    "solve_X",
    "closed_form_X",
    "integrate_flow",
    "fit_decay",
    "fit_order",
    "convergence_study",
    "sample_annulus",
    "graft_experiment",
    "nondegenerate_radius",
]


# -- damping ----------------------------------------------------------------
@dataclass(frozen=True)
class DampingProfile:
    """chi(|x|): 1 on |x| <= r0, 0 on |x| >= r1, quintic smoothstep between."""

    r0: float = 0.5
    r1: float = 0.9

    def __post_init__(self):
        if not 0 < self.r0 < self.r1 <= 1:
            raise ValueError(f"need 0 < r0 < r1 <= 1, got ({self.r0}, {self.r1})")

    def _u(self, s):
        return np.clip((np.asarray(s, float) - self.r0) / (self.r1 - self.r0), 0.0, 1.0)

    def __call__(self, s):
        u = self._u(s)
        return 1.0 - u ** 3 * (10 - 15 * u + 6 * u ** 2)

    def derivative(self, s):
        u = self._u(s)
        return -30 * u ** 2 * (1 - u) ** 2 / (self.r1 - self.r0)

    def second_derivative(self, s):
        u = self._u(s)
        return -60 * u * (1 - u) * (1 - 2 * u) / (self.r1 - self.r0) ** 2

    def gradient(self, x: np.ndarray):
        """(chi, grad chi) for x of shape (..., 3)."""
        s = np.linalg.norm(x, axis=-1)
        chi = self(s)
        ds = self.derivative(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(s[..., None] > 0, ds[..., None] * x / s[..., None], 0.0)
        return chi, g


# -- primitives -------------------------------------------------------------
def _radial_scale(f: RingElement, shift: int) -> RingElement:
    """int_0^1 t^(shift-1) f(theta, t x) dt for a polynomial (exp-free) f."""
    return RingElement(
        [(key, c / (key[0] + key[1] + key[2] + shift)) for key, c in f.items]
    )


_XVARS = (None, R.X1, R.X2, R.X3)


def _cone_symbolic(beta: DiffForm) -> DiffForm:
    comp: dict = {}

    def add(i, c):
        comp[(i,)] = comp.get((i,), R.ZERO) + c

    for idx, f in beta.components.items():
        if idx[0] == 0:
            j = idx[1]
            add(0, -_XVARS[j] * _radial_scale(f, 1))
        else:
            j, k = idx
            g = _radial_scale(f, 2)
            add(k, _XVARS[j] * g)
            add(j, -_XVARS[k] * g)
    return DiffForm(1, comp)


class QuadraturePrimitive:
    """Cone-operator primitive evaluated by Gauss-Legendre quadrature in t."""

    def __init__(self, beta: DiffForm, tol: float = 1e-12):
        self.beta = beta
        self.tol = tol
        self._nodes = {}

    def _rule(self, n):
        if n not in self._nodes:
            t, w = np.polynomial.legendre.leggauss(n)
            self._nodes[n] = (0.5 * (t + 1), 0.5 * w)
        return self._nodes[n]

    def _eval_n(self, n, th, x):
        t, w = self._rule(n)
        shape = x.shape[:-1]
        out = np.zeros(shape + (4,))
        tx = x[..., None, :] * t[:, None]  # (..., n, 3)
        thb = np.broadcast_to(np.asarray(th)[..., None], shape + (n,))
        for idx, f in self.beta.components.items():
            vals = f.evaluate(thb, tx[..., 0], tx[..., 1], tx[..., 2])
            if idx[0] == 0:
                j = idx[1]
                out[..., 0] -= x[..., j - 1] * (vals @ w)
            else:
                j, k = idx
                g = vals @ (w * t)
                out[..., k] += x[..., j - 1] * g
                out[..., j] -= x[..., k - 1] * g
        return out

    def evaluate(self, theta, x1, x2, x3) -> np.ndarray:
        th, a, b, c = np.broadcast_arrays(*(np.asarray(v, float) for v in (theta, x1, x2, x3)))
        x = np.stack([a, b, c], -1)
        prev = self._eval_n(8, th, x)
        for n in (16, 32, 64, 128):
            cur = self._eval_n(n, th, x)
            if np.max(np.abs(cur - prev), initial=0.0) <= self.tol * max(1.0, np.max(np.abs(cur), initial=0.0)):
                return cur
            prev = cur
        return cur

    def jet(self, order: int) -> DiffForm:
        # the cone operator raises x-degree by one, so truncations commute
        return _cone_symbolic(self.beta.jet(order - 1))


def primitive_homotopy(beta: DiffForm, tol: float = 1e-12):
    """A 1-form eta with d(eta) = beta, via the radial homotopy in the D^3 factor.

    Exact (a DiffForm) for polynomial coefficients, otherwise a
    QuadraturePrimitive exposing ``evaluate`` and ``jet``.
    """
    if beta.degree != 2:
        raise DegreeError("primitive_homotopy expects a 2-form")
    if not ext_d(beta).is_zero():
        raise NotClosedError("beta is not closed")
    if beta.has_exp():
        return QuadraturePrimitive(beta, tol)
    return _cone_symbolic(beta)


def loop_integral_coefficient(eta: DiffForm) -> Fraction:
    """q with int_C i^* eta = 2 pi q, exactly."""
    return eta[(0,)].theta_mean()


def loop_integral_check(eta: DiffForm) -> float:
    return 2 * math.pi * float(loop_integral_coefficient(eta))


def taylor_correction(eta) -> RingElement:
    """f = f(theta,0) + sum eta_i(theta,0) x_i + 1/2 sum d_j eta_i(theta,0) x_i x_j.

    f(theta, 0) is the zero-mean antiderivative of eta_theta(theta, 0).
    """
    if not isinstance(eta, DiffForm):
        eta = eta.jet(2)
    if eta.degree != 1:
        raise DegreeError("taylor_correction expects a 1-form")
    along = eta[(0,)].restrict_core()
    if along.theta_mean():
        raise NonzeroLoopIntegralError(
            f"loop integral of eta along C is 2pi*{along.theta_mean()}, not 0"
        )
    f = along.theta_antiderivative()
    for i in (1, 2, 3):
        f = f + eta[(i,)].restrict_core() * _XVARS[i]
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            f = f + Fraction(1, 2) * eta[(i,)].partial(j).restrict_core() * _XVARS[i] * _XVARS[j]
    return f


def first_order_residual(eta: DiffForm, f: RingElement) -> list:
    """Values and first x-derivatives on C of eta - df (all zero iff matched)."""
    from .forms import function_form

    res = eta - ext_d(function_form(f))
    out = []
    for i in range(4):
        c = res[(i,)]
        out.append(c.restrict_core())
        out.extend(c.partial(j).restrict_core() for j in (1, 2, 3))
    return out


def symmetry_relations(eta: DiffForm) -> list:
    """d_i eta_theta - d_theta eta_i and d_j eta_i - d_i eta_j on C.

    These vanish when d(eta) vanishes on C; they are what makes the
    quadratic f match eta to first order.
    """
    out = []
    for i in (1, 2, 3):
        out.append((eta[(0,)].partial(i) - eta[(i,)].partial(0)).restrict_core())
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i < j:
                out.append((eta[(i,)].partial(j) - eta[(j,)].partial(i)).restrict_core())
    return out


class CorrectedEta:
    """eta = eta~ - d(chi f), evaluated numerically."""

    def __init__(self, eta_tilde, f: RingElement, damp: DampingProfile):
        self.eta_tilde = eta_tilde
        self.f = f
        self.damp = damp
        self._df = [f.partial(i) for i in range(4)]

    def evaluate(self, theta, x1, x2, x3) -> np.ndarray:
        th, a, b, c = np.broadcast_arrays(*(np.asarray(v, float) for v in (theta, x1, x2, x3)))
        x = np.stack([a, b, c], -1)
        chi, g = self.damp.gradient(x)
        fv = np.asarray(self.f.evaluate(th, a, b, c), float)
        out = np.array(self.eta_tilde.evaluate(th, a, b, c), dtype=float)
        for i in range(4):
            out[..., i] -= chi * self._df[i].evaluate(th, a, b, c)
        out[..., 1:] -= fv[..., None] * g
        return out

    def __call__(self, P: np.ndarray) -> np.ndarray:
        return self.evaluate(P[..., 0], P[..., 1], P[..., 2], P[..., 3])


def corrected_eta(eta_tilde, f: RingElement, damp: DampingProfile | None = None) -> CorrectedEta:
    return CorrectedEta(eta_tilde, f, damp or DampingProfile())


# -- families ---------------------------------------------------------------
def _diffform_matrix(w: DiffForm, P: np.ndarray) -> np.ndarray:
    return w.matrix_at(P[..., 0], P[..., 1], P[..., 2], P[..., 3])


@dataclass
class Perturbation:
    """beta = epsilon * d(chi * generator) for a 1-form generator."""

    epsilon: Fraction
    generator: DiffForm
    damping: DampingProfile = field(default_factory=DampingProfile)

    def __post_init__(self):
        self.epsilon = Fraction(self.epsilon) if not isinstance(self.epsilon, float) else Fraction(str(self.epsilon))
        if self.generator.degree != 1:
            raise DegreeError("generator must be a 1-form")
        self._dgen = ext_d(self.generator)

    def primitive(self, P: np.ndarray) -> np.ndarray:
        chi, _ = self.damping.gradient(P[..., 1:])
        return float(self.epsilon) * chi[..., None] * self.generator.evaluate(P[..., 0], P[..., 1], P[..., 2], P[..., 3])

    def beta_matrix(self, P: np.ndarray) -> np.ndarray:
        chi, g = self.damping.gradient(P[..., 1:])
        gam = self.generator.evaluate(P[..., 0], P[..., 1], P[..., 2], P[..., 3])
        dchi = np.concatenate([np.zeros(g.shape[:-1] + (1,)), g], -1)
        M = dchi[..., :, None] * gam[..., None, :] - gam[..., :, None] * dchi[..., None, :]
        M = M + chi[..., None, None] * _diffform_matrix(self._dgen, P)
        return float(self.epsilon) * M


class _Evaluator:
    def __init__(self, fn):
        self.fn = fn

    def evaluate(self, theta, x1, x2, x3):
        th, a, b, c = np.broadcast_arrays(*(np.asarray(v, float) for v in (theta, x1, x2, x3)))
        return self.fn(np.stack([th, a, b, c], -1))


class FormFamily:
    """w_t = w0 + t * beta, beta = w1 - w0 or a damped exact perturbation."""

    def __init__(self, omega0: DiffForm, omega1: DiffForm | None = None, perturbation: Perturbation | None = None):
        if (omega1 is None) == (perturbation is None):
            raise ValueError("give exactly one of omega1 or perturbation")
        self.omega0 = omega0
        self.omega1 = omega1
        self.perturbation = perturbation
        if omega1 is not None:
            self.beta = omega1 - omega0
            if not ext_d(self.beta).is_zero():
                raise NotClosedError("omega1 - omega0 is not closed")
            self._prim = primitive_homotopy(self.beta)
        else:
            self.beta = None
            self._prim = None

    @classmethod
    def linear(cls, omega0, omega1):
        return cls(omega0, omega1=omega1)

    @classmethod
    def perturbed(cls, omega0, epsilon, generator, damping=None):
        return cls(omega0, perturbation=Perturbation(epsilon, generator, damping or DampingProfile()))

    def omega_matrix(self, t: float, P: np.ndarray) -> np.ndarray:
        A0 = _diffform_matrix(self.omega0, P)
        if t == 0:
            return A0
        return A0 + t * self.beta_matrix(P)

    def beta_matrix(self, P: np.ndarray) -> np.ndarray:
        if self.perturbation is not None:
            return self.perturbation.beta_matrix(P)
        return _diffform_matrix(self.beta, P)

    @property
    def primitive(self):
        """Evaluator of eta~ (an object with ``evaluate``)."""
        if self.perturbation is not None:
            return _Evaluator(self.perturbation.primitive)
        return self._prim

    @property
    def primitive_jet(self) -> DiffForm:
        """2-jet along C of eta~, exact."""
        if self.perturbation is not None:
            p = self.perturbation
            # chi == 1 near C
            return (p.generator * p.epsilon).jet(2)
        return self._prim.jet(2)


# -- field solve ------------------------------------------------------------
def _pfaffian(A: np.ndarray) -> np.ndarray:
    return A[..., 0, 1] * A[..., 2, 3] - A[..., 0, 2] * A[..., 1, 3] + A[..., 0, 3] * A[..., 1, 2]


def _solve_batch(A: np.ndarray, eta: np.ndarray, eps: float) -> np.ndarray:
    pf = _pfaffian(A)
    scale = np.maximum(1.0, np.max(np.abs(A), axis=(-1, -2))) ** 2
    bad = np.abs(pf) <= eps * scale
    if np.any(bad):
        raise SingularityError(f"2-form degenerate at {int(np.sum(bad))} point(s) (min |Pf| = {np.min(np.abs(pf)):.3g})")
    # X^T A = eta  <=>  A^T X = eta
    return np.linalg.solve(np.swapaxes(A, -1, -2), eta[..., None])[..., 0]


def solve_X(omega_t, eta, p, eps: float = 1e-14) -> np.ndarray:
    """X with i_X omega_t = eta at p (a ChartPoint or a (theta, x1, x2, x3) array)."""
    P = np.asarray(p.as_array() if hasattr(p, "as_array") else p, float)
    if isinstance(omega_t, DiffForm):
        A = _diffform_matrix(omega_t, P)
    elif callable(omega_t):
        A = np.asarray(omega_t(P), float)
    else:
        A = np.asarray(omega_t, float)
    if isinstance(eta, DiffForm) or hasattr(eta, "evaluate"):
        e = np.asarray(eta.evaluate(P[..., 0], P[..., 1], P[..., 2], P[..., 3]), float)
    elif callable(eta):
        e = np.asarray(eta(P), float)
    else:
        e = np.asarray(eta, float)
    return _solve_batch(A, e, eps)


def closed_form_X(L: Sequence[float], eta: Sequence[float]) -> np.ndarray:
    """Row-vector inverse for a purely linear self-dual model with values L = (L1, L2, L3)."""
    L1, L2, L3 = (float(v) for v in L)
    M = np.array([
        [0, -L1, -L2, -L3],
        [L1, 0, -L3, L2],
        [L2, L3, 0, -L1],
        [L3, -L2, L1, 0],
    ])
    return np.asarray(eta, float) @ M / (L1 * L1 + L2 * L2 + L3 * L3)


# -- flow -------------------------------------------------------------------
@dataclass
class DecayFit:
    slope: float
    k: float  # max |X| / |x| over the samples
    radii: np.ndarray
    ratios: np.ndarray  # max over directions/times of |X| / |x| per radius


@dataclass
class FlowResult:
    starts: np.ndarray
    ends: np.ndarray
    pullback_error: np.ndarray
    decay_fit: DecayFit | None
    step_stats: dict
    eta_order: float | None = None

    @property
    def particles(self) -> list:
        return list(zip(self.starts, self.ends))

    @property
    def max_pullback_error(self) -> float:
        return float(np.max(self.pullback_error))


def sample_annulus(n: int, r_min: float, r_max: float, seed: int = 0) -> np.ndarray:
    """n points (theta, x) with theta uniform and |x| uniform in volume on the shell."""
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, n)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = np.cbrt(rng.uniform(r_min ** 3, r_max ** 3, n))
    return np.column_stack([th, d * r[:, None]])


class _Field:
    def __init__(self, family: FormFamily, eta: CorrectedEta, eps: float):
        self.family = family
        self.eta = eta
        self.eps = eps
        self.evaluations = 0

    def __call__(self, t: float, P: np.ndarray) -> np.ndarray:
        self.evaluations += len(P)
        A = self.family.omega_matrix(t, P)
        return _solve_batch(A, -self.eta(P), self.eps)


def _rk4_flow(fld: _Field, P: np.ndarray, steps: int) -> np.ndarray:
    h = 1.0 / steps
    t = 0.0
    for _ in range(steps):
        k1 = fld(t, P)
        k2 = fld(t + 0.5 * h, P + 0.5 * h * k1)
        k3 = fld(t + 0.5 * h, P + 0.5 * h * k2)
        k4 = fld(t + h, P + h * k3)
        P = P + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return P


def _build_eta(family: FormFamily, damping: DampingProfile) -> CorrectedEta:
    f = taylor_correction(family.primitive_jet)
    return CorrectedEta(family.primitive, f, damping)


def fit_decay(family: FormFamily, eta: CorrectedEta, radii=None, n_dirs: int = 16, times=(0.0, 0.5, 1.0),
              seed: int = 0, eps: float = 1e-14) -> DecayFit:
    radii = np.geomspace(0.01, 0.1, 10) if radii is None else np.asarray(radii, float)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_dirs, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    th = rng.uniform(0, 2 * np.pi, n_dirs)
    fld = _Field(family, eta, eps)
    logs_r, logs_x, ratios = [], [], np.zeros(len(radii))
    for t in times:
        for n, r in enumerate(radii):
            P = np.column_stack([th, d * r])
            X = np.linalg.norm(fld(t, P), axis=1)
            ratios[n] = max(ratios[n], float(np.max(X / r)))
            keep = X > 0
            logs_r.extend([math.log(r)] * int(np.sum(keep)))
            logs_x.extend(np.log(X[keep]))
    # X == 0 identically satisfies any bound |X| <= k|x|
    slope = float(np.polyfit(logs_r, logs_x, 1)[0]) if logs_r else math.inf
    return DecayFit(slope, float(np.max(ratios)), radii, ratios)


def fit_order(evaluator, radii=None, n_dirs: int = 16, seed: int = 0) -> float:
    """Least-squares exponent p in |eta(theta, x)| ~ c |x|^p along random rays."""
    radii = np.geomspace(0.005, 0.05, 10) if radii is None else np.asarray(radii, float)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_dirs, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    th = rng.uniform(0, 2 * np.pi, n_dirs)
    lr, lv = [], []
    for r in radii:
        x = d * r
        v = np.linalg.norm(evaluator.evaluate(th, x[:, 0], x[:, 1], x[:, 2]), axis=1)
        keep = v > 0
        lr.extend([math.log(r)] * int(np.sum(keep)))
        lv.extend(np.log(v[keep]))
    if not lr:
        return math.inf
    return float(np.polyfit(lr, lv, 1)[0])


def integrate_flow(
    family: FormFamily,
    particles: np.ndarray,
    steps: int = 16,
    damping: DampingProfile | None = None,
    fd_step: float = 1e-5,
    richardson: bool = False,
    eps: float = 1e-14,
    diagnostics: bool = True,
) -> FlowResult:
    """Integrate the Moser field over t in [0, 1] and measure |phi_1^* w_1 - w_0|.

    The Jacobian of the time-1 map comes from central differences of
    integrated neighbours (step ``fd_step``, optionally Richardson-extrapolated).
    """
    if steps < 1 or 1.0 / steps < 1e-12:
        raise StepUnderflowError(f"invalid step count {steps}")
    if damping is None:
        damping = family.perturbation.damping if family.perturbation is not None else DampingProfile()
    P0 = np.atleast_2d(np.asarray(particles, float))
    n = len(P0)
    eta = _build_eta(family, damping)
    fld = _Field(family, eta, eps)
    deltas = [fd_step] + ([fd_step / 2] if richardson else [])
    blocks = [P0]
    for dlt in deltas:
        for k in range(4):
            e = np.zeros(4)
            e[k] = dlt
            blocks.append(P0 + e)
            blocks.append(P0 - e)
    ends_all = _rk4_flow(fld, np.concatenate(blocks), steps)
    ends = ends_all[:n]

    starts_all = np.concatenate(blocks)

    def jac(offset, dlt):
        D = np.empty((n, 4, 4))
        for k in range(4):
            sl_p = slice((offset + 2 * k) * n, (offset + 2 * k + 1) * n)
            sl_m = slice((offset + 2 * k + 1) * n, (offset + 2 * k + 2) * n)
            # divide by the representable step, not the nominal 2*dlt
            width = starts_all[sl_p, k] - starts_all[sl_m, k]
            D[:, :, k] = (ends_all[sl_p] - ends_all[sl_m]) / width[:, None]
        return D

    D = jac(1, fd_step)
    if richardson:
        D = (4 * jac(9, fd_step / 2) - D) / 3
    A1 = family.omega_matrix(1.0, ends)
    A0 = family.omega_matrix(0.0, P0)
    pulled = np.einsum("nia,nij,njb->nab", D, A1, D)
    err = np.max(np.abs(pulled - A0), axis=(1, 2))
    stats = {
        "steps": steps,
        "h": 1.0 / steps,
        "evaluations": fld.evaluations,
        "max_displacement": float(np.max(np.linalg.norm(ends - P0, axis=1))),
    }
    decay = fit_decay(family, eta, eps=eps) if diagnostics else None
    order = fit_order(eta) if diagnostics else None
    return FlowResult(P0, ends, err, decay, stats, order)


def convergence_study(family: FormFamily, particles: np.ndarray, steps=(1, 2, 4, 8), **kw) -> dict:
    """Observed RK4 order from successive step halvings.

    Two estimates: the decay of the pullback error itself, and the
    self-convergence of the time-1 map (endpoint differences between
    successive resolutions), which is free of the finite-difference floor.
    """
    results = [integrate_flow(family, particles, s, diagnostics=False, **kw) for s in steps]
    errs = [r.max_pullback_error for r in results]
    pull_orders = [math.log2(errs[i] / errs[i + 1]) if errs[i + 1] > 0 else math.inf
                   for i in range(len(errs) - 1)]
    diffs = [float(np.max(np.abs(results[i].ends - results[i + 1].ends))) for i in range(len(results) - 1)]
    self_orders = [math.log2(diffs[i] / diffs[i + 1]) if diffs[i + 1] > 0 else math.inf
                   for i in range(len(diffs) - 1)]
    return {
        "steps": list(steps),
        "pullback_errors": errs,
        "pullback_orders": pull_orders,
        "endpoint_differences": diffs,
        "self_convergence_orders": self_orders,
    }


# -- grafting ---------------------------------------------------------------
def nondegenerate_radius(family: FormFamily, radii=None, n_dirs: int = 64, n_theta: int = 8,
                         n_t: int = 11, rel_tol: float = 1e-6) -> float:
    """Largest radius r such that w_t stays nondegenerate on 0 < |x| <= r (sampled).

    Since |Pf(w_t)| scales like |x|^2 near C, the test is |Pf| / |x|^2 > rel_tol.
    """
    radii = np.linspace(0.05, 1.0, 20) if radii is None else np.sort(np.asarray(radii, float))
    golden = math.pi * (3 - math.sqrt(5))
    i = np.arange(n_dirs)
    z = 1 - 2 * (i + 0.5) / n_dirs
    rr = np.sqrt(1 - z * z)
    dirs = np.column_stack([rr * np.cos(golden * i), rr * np.sin(golden * i), z])
    ths = 2 * np.pi * np.arange(n_theta) / n_theta
    good = 0.0
    for r in radii:
        P = np.array([[th, *(d * r)] for th in ths for d in dirs])
        ok = True
        for t in np.linspace(0, 1, n_t):
            pf = _pfaffian(family.omega_matrix(float(t), P))
            if np.min(np.abs(pf)) / r ** 2 <= rel_tol:
                ok = False
                break
        if not ok:
            break
        good = float(r)
    return good


@dataclass
class GraftReport:
    flow: FlowResult
    radius: float
    splitting: str
    target: str
    max_pullback_error: float

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "splitting": self.splitting,
            "target": self.target,
            "max_pullback_error": self.max_pullback_error,
            "decay_slope": None if self.flow.decay_fit is None else self.flow.decay_fit.slope,
            "eta_order": self.flow.eta_order,
        }


def _as_local(w) -> LocalModel:
    if isinstance(w, LocalModel):
        return w
    if isinstance(w, (str, ModelSpec)):
        return make_model(w)
    return LocalModel(ModelSpec("A"), w)


def graft_experiment(w, target=None, n_particles: int = 64, steps: int = 8, seed: int = 0,
                     fd_step: float = 1e-5) -> GraftReport:
    """Flow from w to the model of the same splitting class along (1-t) w + t w_model."""
    src = _as_local(w)
    if src.glue is not None:
        raise ValueError("grafting needs a form on S^1 x D^3, not a glued representative")
    L = extract_L(src)
    cls = classify_splitting(L)
    vals = np.linalg.eigvalsh(L(0.0))
    sign = 1 if np.sum(vals > 0) == 2 else -1
    if target is None:
        tgt = make_model("A") if cls.value == ORIENTED else make_model(ModelSpec("B", Fraction(1, 2)))
    else:
        tgt = _as_local(target)
    tcls = classify_splitting(extract_L(tgt))
    if tcls.value != cls.value:
        raise ClassMismatchError(f"source splitting is {cls.value}, target is {tcls.value}")
    if tgt.glue is not None:
        raise ValueError("target must be an explicit model on S^1 x D^3")
    tvals = np.linalg.eigvalsh(extract_L(tgt)(0.0))
    tsign = 1 if np.sum(tvals > 0) == 2 else -1
    target_form = tgt.form * (sign * tsign)
    family = FormFamily.linear(src.form, target_form)
    radius = nondegenerate_radius(family)
    if radius <= 0:
        raise SingularityError("family degenerates arbitrarily close to C")
    damping = DampingProfile(0.5 * radius, 0.9 * radius)
    P = sample_annulus(n_particles, 0.2 * radius, 0.8 * radius, seed)
    flow = integrate_flow(family, P, steps, damping, fd_step)
    label = tgt.spec.kind + ("" if sign * tsign == 1 else " (negated)")
    return GraftReport(flow, radius, cls.value, label, flow.max_pullback_error)
