from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdharmonic import ring as R
from sdharmonic.exceptions import (
    DegenerateError,
    NonvanishingOnCoreError,
    NotSelfDualError,
    SamplingTooCoarseError,
)
from sdharmonic.forms import DiffForm, ext_d, from_self_dual, hodge4, pullback_affine
from sdharmonic.models import (
    ORIENTED,
    UNORIENTED,
    LPath,
    ModelSpec,
    chart_grid,
    classify_splitting,
    closedness_conditions,
    extract_L,
    lemma_check,
    make_model,
    nondegeneracy_scan,
    omega_A,
    omega_B,
    split_linear,
    volume_density,
)
from sdharmonic.ring import ChartPoint

HALF = Fraction(1, 2)


def test_model_A_display():
    S = lambda i: from_self_dual([R.ONE if k == i else R.ZERO for k in (1, 2, 3)])
    assert make_model("A").form == S(1) * R.X1 + S(2) * R.X2 + S(3) * (-2 * R.X3)


def test_model_B_is_closed_self_dual():
    for r in (HALF, Fraction(1, 3), Fraction(9, 10)):
        w = omega_B(r)
        assert ext_d(w).is_zero()
        assert hodge4(w) == w


def test_glued_model():
    m = make_model(ModelSpec("B-glued"))
    assert ext_d(m.form).is_zero() and hodge4(m.form) == m.form
    assert pullback_affine(m.glue, m.form) == m.form


def test_model_spec_validation():
    assert ModelSpec("B").R == HALF
    with pytest.raises(ValueError):
        ModelSpec("B", Fraction(1))
    with pytest.raises(ValueError):
        ModelSpec("C")
    with pytest.raises(ValueError):
        ModelSpec("A", HALF)
    spec = ModelSpec("B", Fraction(2, 7))
    assert ModelSpec.from_json(spec.to_json()) == spec


def test_extract_L_A():
    L = extract_L(omega_A())
    np.testing.assert_array_equal(L(0.7), np.diag([1.0, 1.0, -2.0]))
    assert L.entries == LPath.constant(np.diag([1, 1, -2])).entries


def test_extract_L_B_matches_printed_matrix():
    r = HALF
    L = extract_L(omega_B(r))
    c, s = R.cos(1), R.sin(1)
    expected = ((c - r, s, R.ZERO), (s, -c, R.ZERO), (R.ZERO, R.ZERO, R.const(r)))
    assert L.entries == expected


def test_extract_L_errors():
    with pytest.raises(DegenerateError):
        extract_L(DiffForm(2))
    with pytest.raises(NonvanishingOnCoreError):
        extract_L(omega_A() + DiffForm(2, {(1, 2): 1}))
    asd = DiffForm(2, {(0, 1): R.X1, (2, 3): -R.X1})
    with pytest.raises(NotSelfDualError):
        extract_L(asd)


def test_tail_of_B():
    L, Q = split_linear(omega_B(HALF))
    # the tail starts at second order
    for c in Q.components.values():
        assert c.jet(1).is_zero()


def test_lemma_check():
    assert lemma_check(extract_L(omega_A())).ok
    assert lemma_check(extract_L(omega_B(HALF))).ok
    rep = lemma_check(LPath.constant(np.diag([1, 1, -1])))
    assert rep.symmetric and not rep.traceless


def test_classification():
    A = classify_splitting(extract_L(make_model("A")))
    B = classify_splitting(extract_L(make_model("B")))
    G = classify_splitting(extract_L(make_model("B-glued")))
    assert (A.value, A.monodromy_sign) == (ORIENTED, 1)
    assert (B.value, B.monodromy_sign) == (UNORIENTED, -1)
    assert (G.value, G.monodromy_sign) == (UNORIENTED, -1)
    assert classify_splitting(np.diag([-1.0, -1.0, 2.0])).value == ORIENTED


@pytest.mark.parametrize("kind", ["A", "B", "B-glued"])
def test_classification_stable(kind):
    L = extract_L(make_model(kind))
    base = classify_splitting(L).value
    for n in (90, 180, 360, 720):
        assert classify_splitting(L, n).value == base
    assert classify_splitting(-L).value == base


def test_classification_report_json():
    rep = classify_splitting(extract_L(make_model("B"))).to_json()
    assert rep["class"] == UNORIENTED and rep["monodromy_sign"] == -1
    assert rep["samples"] == 360 and rep["min_gap"] > 0


def test_coarse_sampling_detected():
    # eigenline turns by 72 degrees between 5 samples
    c, s = R.cos(2), R.sin(2)
    L = LPath(((c - HALF, s, R.ZERO), (s, -c, R.ZERO), (R.ZERO, R.ZERO, R.const(HALF))))
    with pytest.raises(SamplingTooCoarseError):
        classify_splitting(L, 5)


def test_nondegeneracy_scans():
    for w in (omega_A(), omega_B(HALF)):
        rep = nondegeneracy_scan(w)
        assert rep.min_density > 0
        assert rep.zeros and rep.zeros_only_on_core
    zero = nondegeneracy_scan(DiffForm(2))
    assert len(zero.zeros) == zero.n_points


def test_volume_density_A():
    assert volume_density(omega_A()) == R.X1 ** 2 + R.X2 ** 2 + 4 * R.X3 ** 2


def test_closedness_conditions_for_models():
    for w in (omega_A(), omega_B(HALF)):
        div, twist = closedness_conditions(w)
        assert div.is_zero() and all(t.is_zero() for t in twist)


def test_closedness_conditions_detect_nonclosed():
    w = from_self_dual((R.X2, R.ZERO, R.ZERO))
    div, twist = closedness_conditions(w)
    assert not ext_d(w).is_zero()
    assert not all(t.is_zero() for t in twist)


_coef = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@given(st.lists(_coef, min_size=9, max_size=9))
@settings(max_examples=60, deadline=None)
def test_constant_linear_form_closed_iff_symmetric_traceless(vals):
    L = [vals[0:3], vals[3:6], vals[6:9]]
    X = (R.X1, R.X2, R.X3)
    F = [sum((R.const(L[i][j]) * X[j] for j in range(3)), R.ZERO) for i in range(3)]
    closed = ext_d(from_self_dual(F)).is_zero()
    sym = all(L[i][j] == L[j][i] for i in range(3) for j in range(3))
    assert closed == (sym and sum(L[i][i] for i in range(3)) == 0)


@given(_coef, _coef, _coef, _coef, _coef)
@settings(max_examples=40, deadline=None)
def test_lemma_holds_for_closed_linear_forms(a, b, c, d, e):
    # general constant symmetric traceless L gives a closed self-dual linear form
    L = [[a, b, c], [b, d, e], [c, e, -a - d]]
    X = (R.X1, R.X2, R.X3)
    F = [sum((R.const(L[i][j]) * X[j] for j in range(3)), R.ZERO) for i in range(3)]
    w = from_self_dual(F)
    assert ext_d(w).is_zero()
    try:
        Lp = extract_L(w)
    except DegenerateError:
        return
    assert lemma_check(Lp).ok


def test_chart_grid_inside_disk():
    pts = chart_grid(4, 3, 10)
    assert all(isinstance(p, ChartPoint) and p.radius <= 1 + 1e-12 for p in pts)
