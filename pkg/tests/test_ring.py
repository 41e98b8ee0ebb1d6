import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdharmonic import ring as R
from sdharmonic.exceptions import LimitExceededError, UnsupportedMapError
from sdharmonic.ring import ChartPoint, RingElement, RingTerm, Trig, normalize

from strategies import points, raw_terms, ring_elements

small = ring_elements(max_degree=3, max_freq=2, max_rate=1, max_terms=3)


# -- normalization examples -------------------------------------------------
def test_cos_squared_reduces():
    assert R.cos(1) * R.cos(1) == Fraction(1, 2) + Fraction(1, 2) * R.cos(2)


def test_exponent_rates_add():
    assert R.X1 * R.exp_x3(1) * R.exp_x3(2) == R.X1 * R.exp_x3(3)


def test_double_angle_cancels():
    assert (R.sin(1) * R.cos(1) - Fraction(1, 2) * R.sin(2)).is_zero()


def test_sin_zero_is_zero_and_cos_zero_is_one():
    assert R.sin(0).is_zero()
    assert R.cos(0) == R.ONE
    assert normalize([RingTerm(Fraction(3), trig=Trig("sin", 0))]).is_zero()


def test_negative_frequency_folds():
    assert R.cos(-2) == R.cos(2)
    assert R.sin(-2) == -R.sin(2)


def test_zero_coefficients_dropped():
    e = R.X1 - R.X1
    assert e.is_zero() and len(e) == 0 and not e.items


def test_limits_enforced():
    with pytest.raises(LimitExceededError):
        R.cos(65)
    with pytest.raises(LimitExceededError):
        R.X1 ** 65
    with pytest.raises(LimitExceededError):
        R.exp_x3(40) * R.exp_x3(40)


def test_float_scalars_rejected():
    with pytest.raises(TypeError):
        R.X1 * 0.5


# -- calculus ---------------------------------------------------------------
def test_partial_examples():
    assert R.cos(1).partial("theta") == -R.sin(1)
    assert (R.X1 * R.exp_x3(1)).partial(3) == R.X1 * R.exp_x3(1)
    f = Fraction(1, 2) * (R.X1 ** 2 + R.X2 ** 2) - R.X3 ** 2
    assert f.partial(1) == R.X1


def test_unknown_variable():
    with pytest.raises(ValueError):
        R.X1.partial(7)


def test_evaluate_examples():
    e = R.X1 ** 2 + R.X2 ** 2 + 4 * R.X3 ** 2
    assert e(ChartPoint(0.3, (1, 0, 0))) == pytest.approx(1.0)
    assert R.ZERO(ChartPoint(1.0, (0.1, 0.2, 0.3))) == 0
    assert R.cos(2)(ChartPoint(math.pi / 2, (0, 0, 0))) == pytest.approx(-1.0)


def test_integrate_theta_examples():
    assert R.integrate_theta(R.cos(1)) == 0
    assert R.integrate_theta(R.ONE) == pytest.approx(2 * math.pi)
    assert R.integrate_theta(Fraction(1, 2) + Fraction(1, 2) * R.cos(2)) == pytest.approx(math.pi)
    assert (R.cos(1) ** 2).theta_mean() == Fraction(1, 2)


def test_jet_expands_exponential():
    e = R.X1 * R.exp_x3(2)
    assert e.jet(2) == R.X1 + 2 * R.X1 * R.X3
    assert e.jet(0).is_zero()


def test_theta_antiderivative():
    e = 3 * R.cos(2) - R.sin(1)
    F = e.theta_antiderivative()
    assert F.partial(0) == e
    assert F.theta_mean() == 0
    with pytest.raises(ValueError):
        (R.ONE + R.cos(1)).theta_antiderivative()


def test_substitute_shift_and_reflection():
    e = R.cos(1) * R.X2 + R.sin(2) * R.X3 * R.exp_x3(1)
    lin = ((1, 0, 0), (0, -1, 0), (0, 0, 1))
    got = e.substitute(1, lin)
    assert got == -R.cos(1) * -R.X2 + R.sin(2) * R.X3 * R.exp_x3(1)
    with pytest.raises(UnsupportedMapError):
        R.cos(1).substitute(Fraction(1, 3))
    with pytest.raises(UnsupportedMapError):
        R.exp_x3(1).substitute(0, ((0, 0, 1), (0, 1, 0), (1, 0, 0)))


def test_json_round_trip_example():
    e = Fraction(-3, 7) * R.X1 ** 2 * R.cos(3) * R.exp_x3(-1) + R.const(2)
    data = e.to_json()
    assert RingElement.from_json(data) == e
    assert {"c", "pow", "exp", "trig"} <= set(data[0])


def test_chart_point_validation():
    p = ChartPoint(-1.0, (0, 0, 1))
    assert 0 <= p.theta < 2 * math.pi
    with pytest.raises(ValueError):
        ChartPoint(0, (1, 1, 0))
    with pytest.raises(ValueError):
        ChartPoint(0, (0, 0))


def test_vectorized_matches_scalar():
    e = R.X1 * R.cos(2) + R.X3 ** 2 * R.exp_x3(1) - R.sin(1)
    th = np.linspace(0, 6, 7)
    xs = np.linspace(-0.5, 0.5, 7)
    vec = e.evaluate(th, xs, -xs, xs / 2)
    for i in range(7):
        assert vec[i] == pytest.approx(e.evaluate_raw(th[i], xs[i], -xs[i], xs[i] / 2), rel=1e-13, abs=1e-14)


# -- properties -------------------------------------------------------------
@given(small, small, small)
@settings(max_examples=60, deadline=None)
def test_distributive_and_commutative(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@given(small, small, st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_leibniz_rule(a, b, var):
    assert (a * b).partial(var) == a * b.partial(var) + b * a.partial(var)


@given(small, st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_mixed_partials_commute(a, i, j):
    assert a.partial(i).partial(j) == a.partial(j).partial(i)


def _raw_value(terms, th, x1, x2, x3):
    total = 0.0
    for t in terms:
        a1, a2, a3 = t.powers
        trig = {"one": 1.0, "cos": math.cos(t.trig.m * th), "sin": math.sin(t.trig.m * th)}[t.trig.kind]
        total += float(t.coeff) * x1 ** a1 * x2 ** a2 * x3 ** a3 * math.exp(t.exp_rate * x3) * trig
    return total


@given(raw_terms(max_terms=6), st.lists(points, min_size=1, max_size=5))
@settings(max_examples=100, deadline=None)
def test_normalization_preserves_values(raw, pts):
    e = normalize(raw)
    scale = sum(abs(float(t.coeff)) for t in raw) + 1e-300
    for p in pts:
        assert abs(e.evaluate(*p) - _raw_value(raw, *p)) <= 1e-12 * max(1.0, scale)


@given(ring_elements(), ring_elements())
@settings(max_examples=60, deadline=None)
def test_canonical_form_unique(a, b):
    # equal functions have identical term lists
    assert (a + b - b).items == a.items
    assert RingElement(reversed(a.items)).items == a.items
    assert a.is_zero() == (len(a.items) == 0)


@given(ring_elements())
@settings(max_examples=60, deadline=None)
def test_json_round_trip(a):
    assert RingElement.from_json(a.to_json()) == a
