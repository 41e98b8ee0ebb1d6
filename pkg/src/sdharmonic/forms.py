"""Exterior algebra over the coefficient ring on S^1 x D^3.

Basis 1-forms are ordered (dtheta, dx1, dx2, dx3) and indexed 0..3; a
multi-index is a sorted tuple of those integers.  The orientation
dtheta dx1 dx2 dx3 is positive and the metric is the flat product metric.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import ring as R
from .exceptions import DegreeError, UnsupportedMapError
from .ring import RingElement

__all__ = [
    "DiffForm",
    "AffineChartMap",
    "GLUE_MAP",
    "IDENTITY_MAP",
    "basis_indices",
    "wedge",
    "ext_d",
    "hodge4",
    "hodge3",
    "interior",
    "pullback_affine",
    "function_form",
    "DTHETA",
    "DX1",
    "DX2",
    "DX3",
    "VOLUME",
    "self_dual_basis",
    "anti_self_dual_basis",
    "self_dual_parts",
    "from_self_dual",
]

_LABELS = "θ123"


def basis_indices(degree: int) -> list[tuple]:
    return list(itertools.combinations(range(4), degree))


def _perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an index repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _coerce_coeff(c) -> RingElement:
    return c if isinstance(c, RingElement) else R.const(c)


class DiffForm:
    """A homogeneous differential form with exact coefficients."""

    __slots__ = ("degree", "_comp")

    def __init__(self, degree: int, components: Mapping[tuple, object] | None = None):
        if not 0 <= degree <= 4:
            raise DegreeError(f"degree must lie in 0..4, got {degree}")
        self.degree = degree
        comp = {}
        for idx, c in (components or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise DegreeError(f"multi-index {idx} does not have degree {degree}")
            sign = _perm_sign(idx)
            if sign == 0:
                continue
            key = tuple(sorted(idx))
            val = comp.get(key, R.ZERO) + sign * _coerce_coeff(c)
            if val.is_zero():
                comp.pop(key, None)
            else:
                comp[key] = val
        self._comp = comp

    # -- access -----------------------------------------------------------
    @property
    def components(self) -> dict:
        return dict(self._comp)

    def __getitem__(self, idx) -> RingElement:
        idx = tuple(idx)
        sign = _perm_sign(idx)
        if sign == 0:
            return R.ZERO
        return sign * self._comp.get(tuple(sorted(idx)), R.ZERO)

    def is_zero(self) -> bool:
        return not self._comp

    def map_coefficients(self, fn) -> "DiffForm":
        return DiffForm(self.degree, {k: fn(v) for k, v in self._comp.items()})

    def jet(self, order: int) -> "DiffForm":
        return self.map_coefficients(lambda c: c.jet(order))

    def has_exp(self) -> bool:
        return any(c.has_exp() for c in self._comp.values())

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        if other.degree != self.degree:
            raise DegreeError("cannot add forms of different degree")
        comp = dict(self._comp)
        for k, v in other._comp.items():
            comp[k] = comp.get(k, R.ZERO) + v
        return DiffForm(self.degree, comp)

    def __neg__(self):
        return self.map_coefficients(lambda c: -c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, DiffForm):
            return NotImplemented
        s = _coerce_coeff(scalar)
        return self.map_coefficients(lambda c: s * c)

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self.degree == other.degree and self._comp == other._comp

    def __hash__(self):
        return hash((self.degree, tuple(sorted(self._comp.items()))))

    # -- numerics ---------------------------------------------------------
    def evaluate(self, theta, x1, x2, x3) -> np.ndarray:
        """Components on the sorted basis, stacked along the last axis."""
        keys = basis_indices(self.degree)
        shape = np.broadcast(np.asarray(theta), np.asarray(x1), np.asarray(x2), np.asarray(x3)).shape
        out = np.zeros(shape + (len(keys),))
        for n, k in enumerate(keys):
            c = self._comp.get(k)
            if c is not None:
                out[..., n] = c.evaluate(theta, x1, x2, x3)
        return out

    def matrix_at(self, theta, x1, x2, x3) -> np.ndarray:
        """For a 2-form, the antisymmetric array A[..., i, j] = w(e_i, e_j)."""
        if self.degree != 2:
            raise DegreeError("matrix_at needs a 2-form")
        shape = np.broadcast(np.asarray(theta), np.asarray(x1), np.asarray(x2), np.asarray(x3)).shape
        out = np.zeros(shape + (4, 4))
        for (i, j), c in self._comp.items():
            v = c.evaluate(theta, x1, x2, x3)
            out[..., i, j] = v
            out[..., j, i] = -v
        return out

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "components": {
                "".join(_LABELS[i] for i in k): v.to_json() for k, v in sorted(self._comp.items())
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "DiffForm":
        comp = {}
        for label, val in data.get("components", {}).items():
            idx = tuple(_LABELS.index(ch) if ch in _LABELS else {"t": 0, "0": 0}[ch] for ch in label)
            comp[idx] = RingElement.from_json(val)
        return cls(int(data["degree"]), comp)

    def __repr__(self):
        return f"DiffForm({self})"

    def __str__(self):
        if not self._comp:
            return "0"
        names = ("dθ", "dx1", "dx2", "dx3")
        parts = []
        for k, v in sorted(self._comp.items()):
            basis = "".join(names[i] for i in k)
            parts.append(f"({v}){basis}" if basis else f"({v})")
        return " + ".join(parts)


def function_form(e) -> DiffForm:
    return DiffForm(0, {(): _coerce_coeff(e)})


DTHETA = DiffForm(1, {(0,): 1})
DX1 = DiffForm(1, {(1,): 1})
DX2 = DiffForm(1, {(2,): 1})
DX3 = DiffForm(1, {(3,): 1})
VOLUME = DiffForm(4, {(0, 1, 2, 3): 1})

# (i, j, k) cyclic, so dtheta dx_i + dx_j dx_k is self-dual.
_CYCLIC = {1: (2, 3), 2: (3, 1), 3: (1, 2)}


def self_dual_basis(i: int) -> DiffForm:
    j, k = _CYCLIC[i]
    return DiffForm(2, {(0, i): 1, (j, k): 1})


def anti_self_dual_basis(i: int) -> DiffForm:
    j, k = _CYCLIC[i]
    return DiffForm(2, {(0, i): 1, (j, k): -1})


def self_dual_parts(w: DiffForm):
    """Coefficients (F, G) with w = sum F_i S_i + sum G_i S'_i (S self-dual, S' anti)."""
    if w.degree != 2:
        raise DegreeError("self_dual_parts needs a 2-form")
    half = Fraction(1, 2)
    F, G = [], []
    for i in (1, 2, 3):
        j, k = _CYCLIC[i]
        a, b = w[(0, i)], w[(j, k)]
        F.append(half * (a + b))
        G.append(half * (a - b))
    return tuple(F), tuple(G)


def from_self_dual(F: Sequence) -> DiffForm:
    out = DiffForm(2)
    for i, f in zip((1, 2, 3), F):
        out = out + self_dual_basis(i) * _coerce_coeff(f)
    return out


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    deg = a.degree + b.degree
    if deg > 4:
        raise DegreeError(f"wedge degree {deg} exceeds 4")
    comp: dict = {}
    for ia, ca in a._comp.items():
        for ib, cb in b._comp.items():
            idx = ia + ib
            sign = _perm_sign(idx)
            if not sign:
                continue
            key = tuple(sorted(idx))
            comp[key] = comp.get(key, R.ZERO) + sign * (ca * cb)
    return DiffForm(deg, comp)


def ext_d(a: DiffForm) -> DiffForm:
    if a.degree > 3:
        raise DegreeError("exterior derivative of a 4-form on a 4-manifold is zero by degree")
    comp: dict = {}
    for idx, c in a._comp.items():
        for j in range(4):
            if j in idx:
                continue
            dc = c.partial(j)
            if dc.is_zero():
                continue
            sign = _perm_sign((j,) + idx)
            key = tuple(sorted((j,) + idx))
            comp[key] = comp.get(key, R.ZERO) + sign * dc
    return DiffForm(a.degree + 1, comp)


def hodge4(a: DiffForm) -> DiffForm:
    """Hodge star of the flat product metric, dtheta dx1 dx2 dx3 positive."""
    comp = {}
    for idx, c in a._comp.items():
        rest = tuple(i for i in range(4) if i not in idx)
        comp[rest] = _perm_sign(idx + rest) * c
    return DiffForm(4 - a.degree, comp)


def hodge3(a: DiffForm) -> DiffForm:
    """Flat Hodge star of the D^3 factor, dx1 dx2 dx3 positive."""
    comp = {}
    for idx, c in a._comp.items():
        if 0 in idx:
            raise DegreeError("hodge3 is defined only for forms without a dtheta component")
        rest = tuple(i for i in (1, 2, 3) if i not in idx)
        # sign of the permutation (idx, rest) of (1, 2, 3)
        comp[rest] = _perm_sign(idx + rest) * c
    return DiffForm(3 - a.degree, comp)


def interior(v: Sequence, a: DiffForm) -> DiffForm:
    """Contraction of the vector field ``v`` (4 coefficients) into the first slot."""
    if a.degree < 1:
        raise DegreeError("interior product needs a form of degree >= 1")
    if len(v) != 4:
        raise ValueError("vector field needs 4 components (theta, x1, x2, x3)")
    vec = [_coerce_coeff(c) for c in v]
    comp: dict = {}
    for idx, c in a._comp.items():
        for r, i in enumerate(idx):
            if vec[i].is_zero():
                continue
            key = idx[:r] + idx[r + 1:]
            term = vec[i] * c
            comp[key] = comp.get(key, R.ZERO) + (term if r % 2 == 0 else -term)
    return DiffForm(a.degree - 1, comp)


@dataclass(frozen=True)
class AffineChartMap:
    """(theta, x) -> (theta + shift_pi*pi, linear @ x) with exact rational data."""

    shift_pi: Fraction = Fraction(0)
    linear: tuple = ((1, 0, 0), (0, 1, 0), (0, 0, 1))

    def __post_init__(self):
        lin = tuple(tuple(Fraction(v) for v in row) for row in self.linear)
        if len(lin) != 3 or any(len(row) != 3 for row in lin):
            raise ValueError("linear part must be 3x3")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift_pi", Fraction(self.shift_pi))
        if self.determinant() == 0:
            raise ValueError("linear part must be invertible")

    def determinant(self) -> Fraction:
        m = self.linear
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    def is_orientation_preserving(self) -> bool:
        # the theta translation has unit Jacobian
        return self.determinant() > 0

    def compose(self, inner: "AffineChartMap") -> "AffineChartMap":
        """self o inner."""
        a, b = self.linear, inner.linear
        lin = tuple(tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3))
        return AffineChartMap(self.shift_pi + inner.shift_pi, lin)

    def __matmul__(self, inner):
        return self.compose(inner)

    def apply(self, theta, x) -> tuple:
        lin = np.array(self.linear, dtype=float)
        return theta + float(self.shift_pi) * np.pi, lin @ np.asarray(x, float)

    def to_json(self) -> dict:
        return {
            "shift_pi": str(self.shift_pi),
            "linear": [[str(v) for v in row] for row in self.linear],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AffineChartMap":
        return cls(Fraction(data.get("shift_pi", 0)), tuple(tuple(Fraction(v) for v in row) for row in data["linear"]))


IDENTITY_MAP = AffineChartMap()
GLUE_MAP = AffineChartMap(Fraction(-2), ((1, 0, 0), (0, -1, 0), (0, 0, -1)))


def pullback_affine(m: AffineChartMap, a: DiffForm) -> DiffForm:
    """Exact pullback m^* a."""
    lin = m.linear
    # m^* dx_i = sum_j lin[i][j] dx_j, m^* dtheta = dtheta
    images = [{(0,): Fraction(1)}] + [
        {(j + 1,): lin[i][j] for j in range(3) if lin[i][j]} for i in range(3)
    ]
    out: dict = {}
    for idx, c in a._comp.items():
        coeff = c.substitute(m.shift_pi, lin)
        if coeff.is_zero():
            continue
        # expand the wedge of the pulled back basis 1-forms
        terms = {(): Fraction(1)}
        for i in idx:
            nxt: dict = {}
            for key, s in terms.items():
                for (j,), t in images[i].items():
                    if j in key:
                        continue
                    nk = key + (j,)
                    nxt[nk] = nxt.get(nk, 0) + s * t
            terms = nxt
        for key, s in terms.items():
            sign = _perm_sign(key)
            if not sign or not s:
                continue
            sk = tuple(sorted(key))
            out[sk] = out.get(sk, R.ZERO) + (sign * s) * coeff
    return DiffForm(a.degree, out)
