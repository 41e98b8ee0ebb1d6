"""Exact coefficient ring on the chart S^1 x D^3.

Elements are finite sums of terms

    c * x1**a1 * x2**a2 * x3**a3 * exp(k*x3) * {1, cos(m*theta), sin(m*theta)}

with rational ``c``.  The set is closed under addition, multiplication and
all four partial derivatives, so identities between forms built from these
coefficients can be decided by an exact zero test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import LimitExceededError, UnsupportedMapError

__all__ = [
    "ONE_KIND",
    "COS_KIND",
    "SIN_KIND",
    "Trig",
    "RingTerm",
    "RingLimits",
    "LIMITS",
    "RingElement",
    "ChartPoint",
    "normalize",
    "partial",
    "evaluate",
    "integrate_theta",
    "const",
    "x",
    "cos",
    "sin",
    "exp_x3",
    "ZERO",
    "ONE",
    "X1",
    "X2",
    "X3",
    "VARIABLES",
]

ONE_KIND = "one"
COS_KIND = "cos"
SIN_KIND = "sin"
_KIND_CODE = {ONE_KIND: 0, COS_KIND: 1, SIN_KIND: 2}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}

# variable index: 0 = theta, 1..3 = x1..x3
VARIABLES = ("theta", "x1", "x2", "x3")
_VAR_ALIASES = {
    "theta": 0, "θ": 0, "t": 0, "x1": 1, "x₁": 1, "x2": 2, "x₂": 2, "x3": 3, "x₃": 3,
}


def _var_index(var) -> int:
    if isinstance(var, int):
        if not 0 <= var <= 3:
            raise ValueError(f"variable index out of range: {var}")
        return var
    try:
        return _VAR_ALIASES[var]
    except KeyError:
        raise ValueError(f"unknown variable {var!r}") from None


@dataclass(frozen=True)
class Trig:
    kind: str = ONE_KIND
    m: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown trig kind {self.kind!r}")


@dataclass(frozen=True)
class RingTerm:
    """One raw (not yet normalized) term."""

    coeff: Fraction
    powers: tuple = (0, 0, 0)
    exp_rate: int = 0
    trig: Trig = Trig()


@dataclass
class RingLimits:
    max_frequency: int = 64
    max_degree: int = 64
    max_exp_rate: int = 64


LIMITS = RingLimits()

# A normalized term key: (a1, a2, a3, k, kind_code, m).
_Key = tuple


def _fold(kind: int, m: int):
    """Canonical (sign, kind, m) for a trig factor, or None if it is zero."""
    if kind == 0:
        return 1, 0, 0
    if m < 0:
        m = -m
        sign = -1 if kind == 2 else 1
    else:
        sign = 1
    if m == 0:
        if kind == 2:
            return None
        return sign, 0, 0
    return sign, kind, m


def _trig_product(k1: int, m1: int, k2: int, m2: int):
    """Product-to-sum expansion as [(factor, kind, m), ...] before folding."""
    if k1 == 0:
        return [(1, k2, m2)]
    if k2 == 0:
        return [(1, k1, m1)]
    h = Fraction(1, 2)
    if k1 == 1 and k2 == 1:
        return [(h, 1, m1 - m2), (h, 1, m1 + m2)]
    if k1 == 2 and k2 == 2:
        return [(h, 1, m1 - m2), (-h, 1, m1 + m2)]
    if k1 == 2 and k2 == 1:
        return [(h, 2, m1 + m2), (h, 2, m1 - m2)]
    # cos * sin
    return [(h, 2, m2 + m1), (h, 2, m2 - m1)]


class _Acc(dict):
    def add(self, key, c):
        if not c:
            return
        v = self.get(key, 0) + c
        if v:
            self[key] = v
        else:
            self.pop(key, None)

    def add_trig(self, a1, a2, a3, k, kind, m, c):
        f = _fold(kind, m)
        if f is None:
            return
        sign, kind, m = f
        self.add((a1, a2, a3, k, kind, m), sign * c)


def _check_limits(terms, limits: RingLimits):
    for key, _ in terms:
        a1, a2, a3, k, _kind, m = key
        if m > limits.max_frequency:
            raise LimitExceededError(f"frequency {m} exceeds {limits.max_frequency}")
        if a1 + a2 + a3 > limits.max_degree:
            raise LimitExceededError(f"degree {a1 + a2 + a3} exceeds {limits.max_degree}")
        if abs(k) > limits.max_exp_rate:
            raise LimitExceededError(f"exp rate {k} exceeds {limits.max_exp_rate}")


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"exact rational scalar required, got {type(c).__name__}")


class RingElement:
    """Immutable, canonically ordered sum of ring terms."""

    __slots__ = ("_terms", "_hash", "_np_fn", "_math_fn")

    def __init__(self, terms: Iterable = (), *, _trusted: bool = False, limits: RingLimits | None = None):
        if _trusted:
            self._terms = tuple(terms)
        else:
            acc = _Acc()
            for key, c in terms:
                a1, a2, a3, k, kind, m = key
                acc.add_trig(a1, a2, a3, k, kind, m, _as_fraction(c))
            self._terms = tuple(sorted(acc.items()))
        _check_limits(self._terms, limits or LIMITS)
        self._hash = None
        self._np_fn = None
        self._math_fn = None

    @classmethod
    def _from_acc(cls, acc: _Acc) -> "RingElement":
        return cls(sorted(acc.items()), _trusted=True)

    # -- inspection -------------------------------------------------------
    @property
    def items(self) -> tuple:
        """``((a1, a2, a3, k, kind_code, m), coeff)`` pairs in canonical order."""
        return self._terms

    @property
    def terms(self) -> list[RingTerm]:
        return [
            RingTerm(c, (a1, a2, a3), k, Trig(_KIND_NAME[kind], m))
            for (a1, a2, a3, k, kind, m), c in self._terms
        ]

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    @property
    def degree(self) -> int:
        return max((a1 + a2 + a3 for (a1, a2, a3, *_), _ in self._terms), default=0)

    @property
    def max_frequency(self) -> int:
        return max((key[5] for key, _ in self._terms), default=0)

    def has_exp(self) -> bool:
        return any(key[3] for key, _ in self._terms)

    def is_theta_only(self) -> bool:
        return all(key[:4] == (0, 0, 0, 0) for key, _ in self._terms)

    def constant_value(self):
        """The rational value if the element is a constant, else None."""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and self._terms[0][0] == (0, 0, 0, 0, 0, 0):
            return self._terms[0][1]
        return None

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "RingElement":
        if isinstance(other, RingElement):
            return other
        return const(other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        acc = _Acc(self._terms)
        for key, c in other._terms:
            acc.add(key, c)
        return RingElement._from_acc(acc)

    __radd__ = __add__

    def __neg__(self):
        return RingElement(((key, -c) for key, c in self._terms), _trusted=True)

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return _multiply(self, other)
        try:
            c = _as_fraction(other)
        except TypeError:
            return NotImplemented
        if not c:
            return ZERO
        return RingElement(((key, c * v) for key, v in self._terms), _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # scalar division only
        c = _as_fraction(other)
        return self * (1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, RingElement):
            return self._terms == other._terms
        try:
            return self._terms == const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    # -- calculus ---------------------------------------------------------
    def partial(self, var) -> "RingElement":
        i = _var_index(var)
        acc = _Acc()
        for (a1, a2, a3, k, kind, m), c in self._terms:
            if i == 0:
                if kind == 1:
                    acc.add((a1, a2, a3, k, 2, m), -m * c)
                elif kind == 2:
                    acc.add((a1, a2, a3, k, 1, m), m * c)
            elif i == 1:
                if a1:
                    acc.add((a1 - 1, a2, a3, k, kind, m), a1 * c)
            elif i == 2:
                if a2:
                    acc.add((a1, a2 - 1, a3, k, kind, m), a2 * c)
            else:
                if a3:
                    acc.add((a1, a2, a3 - 1, k, kind, m), a3 * c)
                if k:
                    acc.add((a1, a2, a3, k, kind, m), k * c)
        return RingElement._from_acc(acc)

    def restrict_core(self) -> "RingElement":
        """Restriction to x = 0, a trigonometric polynomial in theta."""
        acc = _Acc()
        for (a1, a2, a3, k, kind, m), c in self._terms:
            if a1 == a2 == a3 == 0:
                acc.add((0, 0, 0, 0, kind, m), c)
        return RingElement._from_acc(acc)

    def jet(self, order: int) -> "RingElement":
        """Taylor truncation in x to total degree <= order (exp factors expanded)."""
        acc = _Acc()
        for (a1, a2, a3, k, kind, m), c in self._terms:
            d = a1 + a2 + a3
            if d > order:
                continue
            if k == 0:
                acc.add((a1, a2, a3, 0, kind, m), c)
                continue
            for n in range(order - d + 1):
                acc.add((a1, a2, a3 + n, 0, kind, m), c * Fraction(k) ** n / math.factorial(n))
        return RingElement._from_acc(acc)

    def theta_mean(self) -> Fraction:
        """(1/2pi) * integral over theta of the restriction to x = 0."""
        return sum(
            (c for (a1, a2, a3, _k, kind, _m), c in self._terms if kind == 0 and a1 == a2 == a3 == 0),
            Fraction(0),
        )

    def theta_antiderivative(self) -> "RingElement":
        """Zero-mean antiderivative of a theta-only element without constant mode."""
        if not self.is_theta_only():
            raise ValueError("antiderivative only defined for theta-only elements")
        if self.theta_mean():
            raise ValueError("element has a constant Fourier mode")
        acc = _Acc()
        for (_a1, _a2, _a3, _k, kind, m), c in self._terms:
            if kind == 1:
                acc.add((0, 0, 0, 0, 2, m), c / m)
            elif kind == 2:
                acc.add((0, 0, 0, 0, 1, m), -c / m)
        return RingElement._from_acc(acc)

    def substitute(self, shift_pi=0, linear: Sequence[Sequence] | None = None) -> "RingElement":
        """Compose with theta -> theta + shift_pi*pi and x -> linear @ x."""
        shift_pi = _as_fraction(shift_pi)
        lin = None if linear is None else [[_as_fraction(v) for v in row] for row in linear]
        images = [None, X1, X2, X3]
        if lin is not None:
            images = [None] + [
                sum((lin[i][j] * (X1, X2, X3)[j] for j in range(3) if lin[i][j]), ZERO) for i in range(3)
            ]
        power_cache: dict = {}

        def pw(i, a):
            if (i, a) not in power_cache:
                power_cache[(i, a)] = images[i] ** a
            return power_cache[(i, a)]

        out = _Acc()
        for (a1, a2, a3, k, kind, m), c in self._terms:
            # theta part
            if kind == 0 or not shift_pi:
                trig_part = [(kind, m, Fraction(1))]
            else:
                n = 2 * m * shift_pi
                if n.denominator != 1:
                    raise UnsupportedMapError(
                        f"theta shift {shift_pi}*pi leaves the ring at frequency {m}"
                    )
                cs, sn = ((1, 0), (0, 1), (-1, 0), (0, -1))[int(n) % 4]
                if kind == 1:  # cos(m th + a) = cos cos a - sin sin a
                    trig_part = [(1, m, Fraction(cs)), (2, m, Fraction(-sn))]
                else:  # sin(m th + a) = sin cos a + cos sin a
                    trig_part = [(2, m, Fraction(cs)), (1, m, Fraction(sn))]
            # exp part
            rate = k
            if k and lin is not None:
                row = lin[2]
                if row[0] or row[1] or (k * row[2]).denominator != 1:
                    raise UnsupportedMapError("exp(k*x3) factor does not survive the linear map")
                rate = int(k * row[2])
            poly = pw(1, a1) * pw(2, a2) * pw(3, a3) if lin is not None else None
            for tk, tm, tc in trig_part:
                if not tc:
                    continue
                if poly is None:
                    out.add_trig(a1, a2, a3, rate, tk, tm, c * tc)
                else:
                    for (b1, b2, b3, _k0, _kd, _m0), pc in poly._terms:
                        out.add_trig(b1, b2, b3, rate, tk, tm, c * tc * pc)
        return RingElement._from_acc(out)

    # -- numerics ---------------------------------------------------------
    def _source(self) -> str:
        parts = []
        for (a1, a2, a3, k, kind, m), c in self._terms:
            factors = [repr(float(c))]
            for name, a in (("x1", a1), ("x2", a2), ("x3", a3)):
                if a == 1:
                    factors.append(name)
                elif a:
                    factors.append(f"{name}**{a}")
            if k:
                factors.append(f"exp({k}*x3)")
            if kind:
                arg = "th" if m == 1 else f"{m}*th"
                factors.append(f"{'cos' if kind == 1 else 'sin'}({arg})")
            parts.append("*".join(factors))
        return " + ".join(parts) if parts else "0.0"

    def _compiled(self, vectorized: bool):
        if vectorized:
            if self._np_fn is None:
                ns = {"exp": np.exp, "cos": np.cos, "sin": np.sin}
                self._np_fn = eval(f"lambda th, x1, x2, x3: {self._source()}", ns)
            return self._np_fn
        if self._math_fn is None:
            ns = {"exp": math.exp, "cos": math.cos, "sin": math.sin}
            self._math_fn = eval(f"lambda th, x1, x2, x3: {self._source()}", ns)
        return self._math_fn

    def evaluate(self, theta, x1, x2, x3):
        """Vectorized double precision evaluation (numpy broadcasting)."""
        if np.ndim(theta) == np.ndim(x1) == np.ndim(x2) == np.ndim(x3) == 0:
            return float(self._compiled(False)(float(theta), float(x1), float(x2), float(x3)))
        th, a, b, c = np.broadcast_arrays(
            np.asarray(theta, float), np.asarray(x1, float), np.asarray(x2, float), np.asarray(x3, float)
        )
        val = self._compiled(True)(th, a, b, c)
        return np.broadcast_to(val, th.shape).astype(float, copy=True)

    def evaluate_raw(self, theta, x1, x2, x3) -> float:
        """Term-by-term evaluation with math.fsum (slow reference path)."""
        vals = []
        for t in self.terms:
            v = float(t.coeff) * x1 ** t.powers[0] * x2 ** t.powers[1] * x3 ** t.powers[2]
            v *= math.exp(t.exp_rate * x3)
            if t.trig.kind == COS_KIND:
                v *= math.cos(t.trig.m * theta)
            elif t.trig.kind == SIN_KIND:
                v *= math.sin(t.trig.m * theta)
            vals.append(v)
        return math.fsum(vals)

    def __call__(self, point: "ChartPoint") -> float:
        return self.evaluate(point.theta, *point.x)

    # -- serialization ----------------------------------------------------
    def to_json(self) -> list:
        out = []
        for (a1, a2, a3, k, kind, m), c in self._terms:
            out.append({
                "c": f"{c.numerator}/{c.denominator}",
                "pow": [a1, a2, a3],
                "exp": k,
                "trig": {"kind": _KIND_NAME[kind], "m": m},
            })
        return out

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "RingElement":
        raw = []
        for rec in data:
            trig = rec.get("trig", {"kind": ONE_KIND, "m": 0})
            raw.append(RingTerm(
                Fraction(rec["c"]), tuple(rec.get("pow", (0, 0, 0))), int(rec.get("exp", 0)),
                Trig(trig["kind"], int(trig.get("m", 0))),
            ))
        return normalize(raw)

    def __repr__(self):
        return f"RingElement({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (a1, a2, a3, k, kind, m), c in self._terms:
            f = []
            for name, a in (("x1", a1), ("x2", a2), ("x3", a3)):
                if a:
                    f.append(name if a == 1 else f"{name}^{a}")
            if k:
                f.append(f"e^({k}x3)" if k != 1 else "e^x3")
            if kind:
                f.append(f"{'cos' if kind == 1 else 'sin'}({'' if m == 1 else m}θ)")
            body = "*".join(f)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")


def _multiply(a: RingElement, b: RingElement) -> RingElement:
    acc = _Acc()
    for (p1, p2, p3, k, kd, m), c in a._terms:
        for (q1, q2, q3, l, ke, n), d in b._terms:
            cd = c * d
            for fac, kind, freq in _trig_product(kd, m, ke, n):
                acc.add_trig(p1 + q1, p2 + q2, p3 + q3, k + l, kind, freq, fac * cd)
    return RingElement._from_acc(acc)


def normalize(raw: Iterable[RingTerm], limits: RingLimits | None = None) -> RingElement:
    """Canonical element from a raw term list (products already expanded)."""
    pairs = []
    for t in raw:
        a1, a2, a3 = t.powers
        if min(a1, a2, a3) < 0:
            raise ValueError("negative exponents are not in the ring")
        pairs.append(((a1, a2, a3, t.exp_rate, _KIND_CODE[t.trig.kind], t.trig.m), _as_fraction(t.coeff)))
    return RingElement(pairs, limits=limits)


def partial(e: RingElement, var) -> RingElement:
    return e.partial(var)


def integrate_theta(e: RingElement) -> float:
    """Integral of e(theta, 0) over [0, 2pi]; exact value is 2pi * e.theta_mean()."""
    return 2 * math.pi * float(e.theta_mean())


# -- constructors ---------------------------------------------------------
def const(c) -> RingElement:
    c = _as_fraction(c)
    if not c:
        return RingElement((), _trusted=True)
    return RingElement((((0, 0, 0, 0, 0, 0), c),), _trusted=True)


def x(i: int) -> RingElement:
    powers = [0, 0, 0]
    powers[i - 1] = 1
    return RingElement(((tuple(powers) + (0, 0, 0), Fraction(1)),), _trusted=True)


def cos(m: int = 1) -> RingElement:
    return RingElement((((0, 0, 0, 0, 1, m), 1),))


def sin(m: int = 1) -> RingElement:
    return RingElement((((0, 0, 0, 0, 2, m), 1),))


def exp_x3(k: int = 1) -> RingElement:
    return RingElement((((0, 0, 0, k, 0, 0), Fraction(1)),), _trusted=True)


ZERO = RingElement((), _trusted=True)
ONE = const(1)
X1, X2, X3 = x(1), x(2), x(3)


@dataclass(frozen=True)
class ChartPoint:
    """A point (theta, x) of S^1 x D^3; theta is reduced modulo 2pi."""

    theta: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))
        xs = tuple(float(v) for v in self.x)
        if len(xs) != 3:
            raise ValueError("x must have three components")
        if math.fsum(v * v for v in xs) > 1 + 1e-9:
            raise ValueError("chart point outside the unit disk")
        object.__setattr__(self, "x", xs)

    @property
    def radius(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.x))

    def as_array(self) -> np.ndarray:
        return np.array((self.theta,) + self.x)


def evaluate(e: RingElement, p: ChartPoint) -> float:
    return e.evaluate(p.theta, *p.x)
