import math
from fractions import Fraction

import numpy as np
import pytest

from sdharmonic import ring as R
from sdharmonic.exceptions import DriftExceededError, OffSphereError, StepUnderflowError
from sdharmonic.forms import ext_d, pullback_affine
from sdharmonic.models import omega_A
from sdharmonic.reeb import (
    CLOSED,
    DOUBLED,
    SINGLE,
    closure_ratio,
    contact_lambda,
    contact_volume,
    integrate_orbit,
    make_contact,
    orbit_census,
    expected_contact_volume,
    positivity_certificate,
    reeb_at,
    reeb_batch,
    reeb_direction_deviation,
    reeb_normalizer,
    return_map_linearization,
    rotation_numbers,
)
from sdharmonic.ring import ChartPoint

A = make_contact("A")
B = make_contact("B-glued")
S = math.sqrt(0.5)


def sphere_points(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    x /= np.linalg.norm(x, axis=1)[:, None]
    # a second pass brings |x| to 1 within rounding
    x /= np.sqrt(np.einsum("ij,ij->i", x, x))[:, None]
    return rng.uniform(0, 2 * math.pi, n), x


# -- contact form -----------------------------------------------------------
def test_lambda_is_primitive():
    assert ext_d(contact_lambda()) == omega_A()
    assert pullback_affine(B.deck, B.lam) == B.lam
    assert B.glued and not A.glued


def test_lambda_at_pole_is_dtheta():
    np.testing.assert_allclose(A.lam.evaluate(0.0, 0.0, 0.0, 1.0), [1, 0, 0, 0])


def test_contact_volume_identity():
    vol = contact_volume(A)
    rho, z = R.X1 ** 2 + R.X2 ** 2, R.X3 ** 2
    assert vol == Fraction(1, 2) * rho * (rho + 2 * z) + 2 * z ** 2
    assert vol == expected_contact_volume()
    assert vol.evaluate(0.0, 0.0, 0.0, 1.0) == pytest.approx(2.0)
    assert vol.evaluate(0.0, 0.0, 0.0, -1.0) == pytest.approx(2.0)
    assert vol.evaluate(0.0, 0.0, 0.0, 0.0) == 0.0


def test_positivity_certificate():
    cert = positivity_certificate(contact_volume(A))
    assert cert == [(Fraction(2), 0, 2), (Fraction(1), 1, 1), (Fraction(1, 2), 2, 0)]
    assert positivity_certificate(R.X1 ** 2 - R.X3 ** 2) is None
    assert positivity_certificate(R.X1 * R.X3) is None


def test_unknown_contact_kind():
    with pytest.raises(ValueError):
        make_contact("C")


# -- Reeb field -------------------------------------------------------------
def test_reeb_special_values():
    for th in (0.0, 1.0, 4.0):
        np.testing.assert_allclose(reeb_at(A, ChartPoint(th, (0, 0, 1))), [1, 0, 0, 0], atol=1e-14)
        np.testing.assert_allclose(reeb_at(A, ChartPoint(th, (0, 0, -1))), [1, 0, 0, 0], atol=1e-14)
        np.testing.assert_allclose(reeb_at(A, ChartPoint(th, (1, 0, 0))), [-2, 0, 0, 0], atol=1e-14)
        np.testing.assert_allclose(reeb_at(A, ChartPoint(th, (-1, 0, 0))), [-2, 0, 0, 0], atol=1e-14)


@pytest.mark.parametrize("model", [A, B], ids=["A", "B-glued"])
def test_reeb_defining_properties(model):
    th, xs = sphere_points(1000, 11)
    X = reeb_batch(model, th, xs)
    lam = model.lam.evaluate(th, xs[:, 0], xs[:, 1], xs[:, 2])
    assert np.max(np.abs(np.einsum("ni,ni->n", lam, X) - 1)) <= 1e-10
    # tangent vectors: d/dtheta and the sphere tangents
    M = model.omega.matrix_at(th, xs[:, 0], xs[:, 1], xs[:, 2])
    iX = np.einsum("ni,nij->nj", X, M)
    assert np.max(np.abs(iX[:, 0])) <= 1e-10
    proj = iX[:, 1:] - np.einsum("ni,ni->n", iX[:, 1:], xs)[:, None] * xs
    assert np.max(np.abs(proj)) <= 1e-10
    # tangent to the sphere
    assert np.max(np.abs(np.einsum("ni,ni->n", X[:, 1:], xs))) <= 1e-12


def test_scalar_and_batch_agree():
    th, xs = sphere_points(20, 3)
    X = reeb_batch(A, th, xs)
    for i in range(20):
        np.testing.assert_allclose(reeb_at(A, (th[i], *xs[i])), X[i], rtol=1e-12, atol=1e-13)


def test_off_sphere():
    with pytest.raises(OffSphereError):
        reeb_at(A, (0.0, 0.5, 0.0, 0.0))


def test_reeb_parallel_to_J_radial():
    th, xs = sphere_points(200, 7)
    for i in range(200):
        assert reeb_direction_deviation(A, ChartPoint(th[i], tuple(xs[i]))) <= 1e-8


def test_normalizer_settles_quartic_constant():
    th, xs = sphere_points(50, 9)
    for x in xs:
        rho, z = x[0] ** 2 + x[1] ** 2, x[2] ** 2
        f = reeb_normalizer(A, x)
        assert f == pytest.approx(-0.5 * (rho * (rho + 2 * z) + 4 * z * z), abs=1e-13)
        V = np.array([rho - 2 * z, -3 * x[1] * x[2], 3 * x[0] * x[2], 0.0])
        # V / f is the Reeb field; V carries only theta, x1, x2 components
        X = reeb_at(A, (0.0, *x))
        np.testing.assert_allclose(X, V / f, atol=1e-12)
    # with 2 x3^4 in place of 4 x3^4 the pole value would be V / f = 2 d/dtheta
    V_pole = np.array([-2.0, 0.0, 0.0, 0.0])
    assert (V_pole / (-0.5 * 2))[0] == 2.0
    assert reeb_at(A, (0.0, 0.0, 0.0, 1.0))[0] == pytest.approx(1.0)


# -- rotation numbers -------------------------------------------------------
def test_rotation_numbers():
    eq = rotation_numbers(A, 0.0)
    assert eq.R1 == pytest.approx(0.0, abs=1e-15) and eq.R2 == pytest.approx(-2.0)
    pole = rotation_numbers(A, 1.0)
    assert pole.degenerate and pole.R2 == pytest.approx(1.0)
    for r in (0.2, 0.5, 0.8):
        up, down = rotation_numbers(A, r), rotation_numbers(A, -r)
        assert up.theta_independent
        assert math.copysign(1, up.R1) == -math.copysign(1, down.R1)
    s3 = rotation_numbers(A, 1 / math.sqrt(3))
    assert abs(s3.R2) < 1e-12
    closed, frac = closure_ratio(s3)
    assert closed and frac == 0


# -- orbits -----------------------------------------------------------------
def test_pole_orbit():
    rec = integrate_orbit(A, ChartPoint(0, (0, 0, 1)), T=7.0, stop_at_closure=True)
    assert rec.closed == CLOSED and abs(rec.period - 2 * math.pi) <= 1e-6


def test_equator_orbit():
    rec = integrate_orbit(A, ChartPoint(0, (1, 0, 0)), T=4.0, stop_at_closure=True)
    assert rec.closed == CLOSED and abs(rec.period - math.pi) <= 1e-6


def test_glued_equator_doubled():
    rec = integrate_orbit(B, ChartPoint(0, (S, S, 0)), T=7.0)
    assert rec.closed == CLOSED and rec.multiplicity == DOUBLED
    assert rec.period == pytest.approx(2 * math.pi, abs=1e-6)
    assert len(rec.events) >= 2


def test_glued_fixed_points_single():
    for x in ((1, 0, 0), (-1, 0, 0)):
        rec = integrate_orbit(B, ChartPoint(0, x), T=4.0)
        assert rec.closed == CLOSED and rec.multiplicity == SINGLE
        assert rec.period == pytest.approx(math.pi, abs=1e-6)


def test_glued_pole_doubled():
    rec = integrate_orbit(B, ChartPoint(0.5, (0, 0, 1)), T=13.0)
    assert rec.multiplicity == DOUBLED and rec.period == pytest.approx(4 * math.pi, abs=1e-6)


def test_static_circle_closes_by_proximity():
    r = 1 / math.sqrt(3)
    s = math.sqrt(1 - r * r)
    rec = integrate_orbit(A, ChartPoint(0, (s, 0, r)), T=3.0)
    R1 = rotation_numbers(A, r).R1
    assert rec.closed == CLOSED and rec.period == pytest.approx(2 * math.pi / abs(R1), abs=1e-6)


def test_drift_conserved_long_run():
    rec = integrate_orbit(A, ChartPoint(0.3, (0.48, 0.6, 0.64)), T=100.0)
    assert rec.drift <= 1e-8


def test_trajectory_recording_and_errors():
    rec = integrate_orbit(A, ChartPoint(0, (0, 0, 1)), T=0.1, record_every=10)
    assert rec.trajectory.shape == (11, 5)
    with pytest.raises(StepUnderflowError):
        integrate_orbit(A, ChartPoint(0, (0, 0, 1)), h=1e-14)
    with pytest.raises(DriftExceededError):
        integrate_orbit(A, ChartPoint(0, (0.6, 0, 0.8)), T=2.0, h=0.5, drift_limit=1e-14)


def test_orbit_record_json():
    rec = integrate_orbit(B, ChartPoint(0, (S, S, 0)), T=7.0)
    data = rec.to_json()
    assert data["multiplicity"] == DOUBLED and data["verdict"] == CLOSED


# -- census -----------------------------------------------------------------
def test_census_A():
    entries = orbit_census(A, 21)
    rs = {round(e.r, 12) for e in entries if e.verdict == CLOSED}
    assert {0.0, 1.0, -1.0} <= rs
    assert all(e.verified for e in entries if e.verified is not None)


def test_census_B():
    entries = orbit_census(B, 21)
    poles = [e for e in entries if abs(abs(e.r) - 1) < 1e-12]
    assert poles and all(e.multiplicity == DOUBLED for e in poles)
    eq = [e for e in entries if abs(e.r) < 1e-12]
    for e in eq:
        x = e.point
        want = SINGLE if abs(x[1]) < 1e-12 else DOUBLED
        assert e.multiplicity == want and e.verified
    assert any(abs(e.point[0] + 1) < 1e-12 for e in eq) and any(abs(e.point[0] - 1) < 1e-12 for e in eq)


def test_return_map_at_pole():
    J = return_map_linearization(A, ChartPoint(0, (0, 0, 1)))
    np.testing.assert_allclose(J, -np.eye(2), atol=1e-5)
