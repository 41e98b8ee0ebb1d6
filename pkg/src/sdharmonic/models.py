"""Model forms near a zero circle, their linearization, and splitting type."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import ring as R
from .exceptions import (
    DegenerateError,
    NonvanishingOnCoreError,
    NotSelfDualError,
    SamplingTooCoarseError,
)
from .forms import (
    GLUE_MAP,
    AffineChartMap,
    DiffForm,
    from_self_dual,
    self_dual_parts,
    wedge,
)
from .ring import ChartPoint, RingElement

__all__ = [
    "ModelSpec",
    "LocalModel",
    "LPath",
    "LemmaReport",
    "SplittingClass",
    "ScanReport",
    "make_model",
    "omega_A",
    "omega_B",
    "mu_A",
    "extract_L",
    "split_linear",
    "lemma_check",
    "classify_splitting",
    "nondegeneracy_scan",
    "volume_density",
    "closedness_conditions",
    "chart_grid",
    "ORIENTED",
    "UNORIENTED",
]

ORIENTED = "Oriented"
UNORIENTED = "Unoriented"

_KINDS = ("A", "B", "B-glued")


@dataclass(frozen=True)
class ModelSpec:
    """Which model: ``A``, ``B`` (explicit, needs 0 < R < 1) or ``B-glued``."""

    kind: str = "A"
    R: Fraction | None = None

    def __post_init__(self):
        kind = {"B_explicit": "B", "B_glued": "B-glued", "Bglued": "B-glued"}.get(self.kind, self.kind)
        if kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "B":
            r = Fraction(1, 2) if self.R is None else Fraction(self.R)
            if not 0 < r < 1:
                raise ValueError(f"model B needs 0 < R < 1, got {r}")
            object.__setattr__(self, "R", r)
        elif self.R is not None:
            raise ValueError(f"model {kind} takes no R parameter")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.R is not None:
            out["R"] = str(self.R)
        return out

    @classmethod
    def from_json(cls, data) -> "ModelSpec":
        if isinstance(data, str):
            return cls(data)
        r = data.get("R")
        return cls(data["kind"], None if r is None else Fraction(str(r)))


@dataclass(frozen=True)
class LocalModel:
    spec: ModelSpec
    form: DiffForm
    glue: AffineChartMap | None = None


def mu_A() -> DiffForm:
    """The 1-form d(1/2 (x1^2 + x2^2) - x3^2)."""
    return DiffForm(1, {(1,): R.X1, (2,): R.X2, (3,): -2 * R.X3})


def omega_A() -> DiffForm:
    return from_self_dual((R.X1, R.X2, -2 * R.X3))


def omega_B(r=Fraction(1, 2)) -> DiffForm:
    r = Fraction(r)
    e = R.exp_x3(1)
    c, s = R.cos(1), R.sin(1)
    f1 = (R.X1 * c + R.X2 * s) * e - r * R.X1
    f2 = (R.X1 * s - R.X2 * c) * e
    f3 = r * R.X3
    return from_self_dual((f1, f2, f3))


def make_model(spec: ModelSpec | str) -> LocalModel:
    if isinstance(spec, str):
        spec = ModelSpec(spec)
    if spec.kind == "A":
        return LocalModel(spec, omega_A())
    if spec.kind == "B":
        return LocalModel(spec, omega_B(spec.R))
    # B-glued: the A-shaped form on [0, 2pi] x D^3 glued by GLUE_MAP
    return LocalModel(spec, omega_A(), GLUE_MAP)


# -- linearization ----------------------------------------------------------
@dataclass
class LPath:
    """theta -> (L_ij(theta)) with exact entries depending on theta only."""

    entries: tuple
    sample_count: int = 360
    glue: tuple | None = None  # linear part of the glueing map, if any

    def __post_init__(self):
        self.entries = tuple(tuple(R.const(v) if not isinstance(v, RingElement) else v for v in row)
                             for row in self.entries)
        for row in self.entries:
            for v in row:
                if not v.is_theta_only():
                    raise ValueError("L entries must depend on theta only")

    @classmethod
    def constant(cls, matrix, **kw) -> "LPath":
        return cls(tuple(tuple(R.const(Fraction(v)) for v in row) for row in matrix), **kw)

    def __call__(self, theta) -> np.ndarray:
        return np.array([[v.evaluate(theta, 0.0, 0.0, 0.0) for v in row] for row in self.entries])

    def __neg__(self) -> "LPath":
        return LPath(tuple(tuple(-v for v in row) for row in self.entries), self.sample_count, self.glue)

    def transpose(self) -> tuple:
        return tuple(tuple(self.entries[j][i] for j in range(3)) for i in range(3))

    def trace(self) -> RingElement:
        return self.entries[0][0] + self.entries[1][1] + self.entries[2][2]

    def determinant(self) -> RingElement:
        m = self.entries
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    def samples(self, n: int | None = None) -> np.ndarray:
        n = n or self.sample_count
        thetas = np.linspace(0.0, 2 * np.pi, n + 1)
        z = np.zeros_like(thetas)
        out = np.empty((n + 1, 3, 3))
        for i in range(3):
            for j in range(3):
                out[:, i, j] = self.entries[i][j].evaluate(thetas, z, z, z)
        return out

    def to_json(self) -> dict:
        return {"entries": [[v.to_json() for v in row] for row in self.entries]}


def split_linear(w: DiffForm, sample_count: int = 360, glue=None) -> tuple[LPath, DiffForm]:
    """L(theta) of the self-dual part and the higher-order tail Q = w - linear part."""
    if w.degree != 2:
        raise ValueError("split_linear needs a 2-form")
    for idx, c in w.components.items():
        if not c.restrict_core().is_zero():
            raise NonvanishingOnCoreError(f"component {idx} does not vanish on x = 0")
    F, G = self_dual_parts(w)
    for g in G:
        for j in (1, 2, 3):
            if not g.partial(j).restrict_core().is_zero():
                raise NotSelfDualError("anti-self-dual part is nonzero at first order")
    entries = tuple(tuple(F[i].partial(j).restrict_core() for j in (1, 2, 3)) for i in range(3))
    lin = tuple(sum((entries[i][j] * (R.X1, R.X2, R.X3)[j] for j in range(3)), R.ZERO) for i in range(3))
    tail = w - from_self_dual(lin)
    glue_lin = None
    if glue is not None:
        glue_lin = glue.linear if isinstance(glue, AffineChartMap) else tuple(tuple(r) for r in glue)
    L = LPath(entries, sample_count, glue_lin)
    dets = np.linalg.det(L.samples())
    scale = max(1.0, float(np.max(np.abs(L.samples()))))
    if np.min(np.abs(dets)) < 1e-12 * scale ** 3:
        raise DegenerateError("L(theta) is singular: the form is not transverse to zero")
    return L, tail


def extract_L(w, sample_count: int = 360, glue=None) -> LPath:
    if isinstance(w, LocalModel):
        glue = w.glue if glue is None else glue
        w = w.form
    return split_linear(w, sample_count, glue)[0]


@dataclass(frozen=True)
class LemmaReport:
    symmetric: bool
    traceless: bool

    @property
    def ok(self) -> bool:
        return self.symmetric and self.traceless


def lemma_check(L: LPath) -> LemmaReport:
    sym = all(L.entries[i][j] == L.entries[j][i] for i in range(3) for j in range(i + 1, 3))
    return LemmaReport(sym, L.trace().is_zero())


@dataclass(frozen=True)
class SplittingClass:
    value: str
    monodromy_sign: int
    min_gap: float = float("nan")
    samples: int = 0

    def __post_init__(self):
        if (self.value == ORIENTED) != (self.monodromy_sign == 1):
            raise ValueError("Oriented iff monodromy sign is +1")

    def to_json(self) -> dict:
        return {
            "class": self.value,
            "monodromy_sign": self.monodromy_sign,
            "min_gap": self.min_gap,
            "samples": self.samples,
        }


def classify_splitting(L: LPath | np.ndarray, sample_count: int | None = None) -> SplittingClass:
    """Z/2 monodromy of the simple (minority-sign) eigenline of L over the circle.

    The eigenline is followed through ``sample_count`` steps of theta, each
    time choosing the sign closest to the previous vector; the monodromy is
    the sign of <v(2pi), v(0)>, with the glueing map applied at 2pi.
    """
    if isinstance(L, np.ndarray):
        L = LPath.constant(L)
    n = sample_count or L.sample_count
    mats = L.samples(n)
    vals, vecs = np.linalg.eigh(mats)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.min(np.abs(vals)) < 1e-12 * scale:
        raise DegenerateError("L(theta) has a zero eigenvalue")
    npos = np.sum(vals > 0, axis=1)
    if np.any(npos != npos[0]) or npos[0] in (0, 3):
        raise DegenerateError("eigenvalue signature changes along the circle")
    # two positive -> the negative one (lowest) is simple, and vice versa
    pick = 0 if npos[0] == 2 else 2
    gaps = np.abs(vals[:, 1] - vals[:, pick])
    v = vecs[0][:, pick]
    start = v.copy()
    for k in range(1, n + 1):
        w = vecs[k][:, pick]
        dot = float(w @ v)
        if abs(dot) < 1 / math.sqrt(2):
            raise SamplingTooCoarseError(
                f"eigenline moved too far between samples {k - 1} and {k} (|<v,w>| = {abs(dot):.3f})"
            )
        v = w if dot > 0 else -w
    if L.glue is not None:
        v = np.array(L.glue, dtype=float) @ v
    sign = 1 if float(v @ start) > 0 else -1
    return SplittingClass(ORIENTED if sign == 1 else UNORIENTED, sign, float(np.min(gaps)), n)


# -- nondegeneracy ----------------------------------------------------------
def volume_density(w: DiffForm) -> RingElement:
    """The function lambda^2 with (1/2) w ^ w = lambda^2 vol."""
    return wedge(w, w)[(0, 1, 2, 3)] * Fraction(1, 2)


@dataclass
class ScanReport:
    min_density: float  # over grid points off the core circle
    zeros: list = field(default_factory=list)
    n_points: int = 0

    @property
    def zeros_only_on_core(self) -> bool:
        return all(p.radius == 0.0 for p in self.zeros)


def chart_grid(n_theta: int = 12, n_radius: int = 6, n_dir: int = 26, include_core: bool = True) -> list:
    """Points on spheres of radius k/n_radius in a Fibonacci direction layout."""
    pts = []
    golden = math.pi * (3 - math.sqrt(5))
    dirs = []
    for i in range(n_dir):
        z = 1 - 2 * (i + 0.5) / n_dir
        rr = math.sqrt(1 - z * z)
        dirs.append((rr * math.cos(golden * i), rr * math.sin(golden * i), z))
    for a in range(n_theta):
        th = 2 * math.pi * a / n_theta
        if include_core:
            pts.append(ChartPoint(th, (0.0, 0.0, 0.0)))
        for k in range(1, n_radius + 1):
            r = k / n_radius
            for d in dirs:
                pts.append(ChartPoint(th, tuple(r * c for c in d)))
    return pts


def nondegeneracy_scan(w: DiffForm, grid: Iterable[ChartPoint] | None = None, tol: float = 1e-12) -> ScanReport:
    pts = list(chart_grid() if grid is None else grid)
    dens = volume_density(w)
    th = np.array([p.theta for p in pts])
    xs = np.array([p.x for p in pts]).reshape(-1, 3)
    vals = dens.evaluate(th, xs[:, 0], xs[:, 1], xs[:, 2])
    zeros = [p for p, v in zip(pts, vals) if abs(v) <= tol]
    off = [v for p, v in zip(pts, vals) if p.radius > 0]
    return ScanReport(float(min(off)) if off else float("nan"), zeros, len(pts))


def closedness_conditions(w: DiffForm) -> tuple:
    """For a self-dual w = sum F_i (dtheta dx_i + dx_j dx_k), the pair (div F, dF/dtheta - curl F).

    w is closed iff both vanish; this is the first-order shape of dw = 0.
    """
    F, G = self_dual_parts(w)
    if any(not g.is_zero() for g in G):
        raise NotSelfDualError("closedness_conditions expects a self-dual form")
    div = F[0].partial(1) + F[1].partial(2) + F[2].partial(3)
    curl = (
        F[2].partial(2) - F[1].partial(3),
        F[0].partial(3) - F[2].partial(1),
        F[1].partial(1) - F[0].partial(2),
    )
    twist = tuple(F[i].partial(0) - curl[i] for i in range(3))
    return div, twist
