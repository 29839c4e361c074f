import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from yspec import airy
from yspec.airy import RotationIndex, Sector, StokesRay
from yspec.errors import ValidationError

OMEGA = cmath.exp(2j * math.pi / 3)


def mp_ai(z):
    return complex(mp.airyai(mp.mpc(z)))


def mp_aip(z):
    return complex(mp.airyai(mp.mpc(z), derivative=1))


def random_disk(rng, n, r):
    return r * np.sqrt(rng.uniform(0, 1, n)) * np.exp(1j * rng.uniform(-np.pi, np.pi, n))


# --- point values ------------------------------------------------------------

def test_values_at_zero_and_one():
    assert airy.ai(0) == pytest.approx(0.3550280538878172, rel=1e-14)
    assert airy.ai(1) == pytest.approx(0.1352924163128814, rel=1e-13)
    assert airy.ai_prime(0) == pytest.approx(-0.2588194037928068, rel=1e-14)
    assert airy.ai_prime(1) == pytest.approx(-0.1591474412967932, rel=1e-13)


def test_first_real_zero():
    assert abs(airy.ai(-2.338107410459767)) <= 1e-9


def test_large_real_derivative_ratio():
    r = airy.ai_prime(25) / airy.ai(25)
    assert r.real < 0
    assert abs(abs(r) - 5.0) <= 0.05


def test_rotated_examples():
    assert airy.ai_rotated(0, 0) == pytest.approx(0.3550280538878172, rel=1e-14)
    assert airy.ai_rotated(RotationIndex.PLUS, OMEGA) == pytest.approx(airy.ai(1), rel=1e-12)
    s = airy.ai_rotated(0, 2) + OMEGA.conjugate() * airy.ai_rotated(1, 2) + OMEGA * airy.ai_rotated(-1, 2)
    assert abs(s) <= 1e-10


def test_rotation_index_rejects_other_values():
    for bad in (2, -2, 0.5, True):
        with pytest.raises(ValidationError):
            airy.ai_rotated(bad, 1.0)


# --- accuracy against an arbitrary-precision oracle ---------------------------

def test_accuracy_against_oracle(rng):
    zs = random_disk(rng, 600, 30.0)
    zs = np.concatenate([zs, np.linspace(-30, 30, 61), 1j * np.linspace(-30, 30, 61),
                         30 * np.exp(1j * np.linspace(-np.pi, np.pi, 73))])
    worst_ai = worst_aip = 0.0
    for z in zs:
        ref, refp = mp_ai(z), mp_aip(z)
        if abs(ref) > 1e-280:
            worst_ai = max(worst_ai, abs(airy.ai(z) - ref) / abs(ref))
        if abs(refp) > 1e-280:
            worst_aip = max(worst_aip, abs(airy.ai_prime(z) - refp) / abs(refp))
    assert worst_ai <= 1e-10
    assert worst_aip <= 1e-9


def test_near_negative_axis_uses_connection(rng):
    # just above and below the cut, where the direct expansion is invalid
    for r in (8.0, 15.0, 29.0):
        for eps in (1e-3, 0.02, 0.04):
            for s in (1, -1):
                z = r * cmath.exp(1j * s * (math.pi - eps))
                assert abs(airy.ai(z) - mp_ai(z)) <= 1e-10 * abs(mp_ai(z))


def test_log_form_agrees_with_oracle_for_huge_arguments():
    for z in (200.0, 150 * cmath.exp(0.9j), 300 * cmath.exp(-2.0j)):
        la, pa, _, _ = airy.airy_log(z)
        ref = mp.airyai(mp.mpc(z))
        assert la == pytest.approx(float(mp.log(abs(ref))), abs=1e-9)
        assert cmath.exp(1j * (pa - float(mp.arg(ref)))) == pytest.approx(1.0, abs=1e-9)


def test_overflow_sentinel():
    val, over = airy.ai(-2000.0 * cmath.exp(0.5j), return_overflow=True)
    assert over and not np.isfinite(val)
    val, over = airy.ai(1.0, return_overflow=True)
    assert not over


# --- properties ----------------------------------------------------------------

def test_ode_residual(rng):
    zs = random_disk(rng, 200, 5.0)
    d = 1e-3
    for z in zs:
        a = airy.ai(z)
        second = (airy.ai(z + d) - 2 * a + airy.ai(z - d)) / d ** 2
        assert abs(second - z * a) <= 1e-4 * (1 + abs(a))


def test_connection_identity(rng):
    for z in random_disk(rng, 500, 8.0):
        s = airy.ai_rotated(0, z) + OMEGA.conjugate() * airy.ai_rotated(1, z) + OMEGA * airy.ai_rotated(-1, z)
        scale = max(abs(airy.ai_rotated(k, z)) for k in (-1, 0, 1))
        assert abs(s) <= 1e-10 * max(1.0, scale)


def test_branch_overlap_annulus(rng):
    n = 400
    r = rng.uniform(airy.R_SWITCH, airy.R_SWITCH + 2, n)
    phi = rng.uniform(-0.9 * np.pi, 0.9 * np.pi, n)
    z = r * np.exp(1j * phi)
    near_a, near_ap = airy._near_field(z)
    far_e, far_ep, _ = airy._far_scaled(z)
    zeta = airy.zeta_of(z)
    far_a = far_e * np.exp(-zeta)
    far_ap = far_ep * np.exp(-zeta)
    assert np.max(np.abs(near_a - far_a) / np.abs(far_a)) <= 1e-6
    assert np.max(np.abs(near_ap - far_ap) / np.abs(far_ap)) <= 1e-6


def _re32(w):
    return float(airy.principal_power(w, 1.5).real)


def test_sector_identities(rng):
    e_m, e_p = cmath.exp(-2j * math.pi / 3), cmath.exp(2j * math.pi / 3)
    checked = 0
    for z in random_disk(rng, 800, 10.0):
        sec = airy.sector_of(z).tag
        if sec == Sector.STOKES_BOUNDARY:
            continue
        a, b, c = _re32(e_m * z), _re32(e_p * z), _re32(z)
        tol = 1e-12 * max(1.0, abs(z) ** 1.5)
        # first identity
        assert abs(a - (b if sec == Sector.S0 else -b)) <= tol
        # second identity
        assert abs(a - (c if sec == Sector.SM1 else -c)) <= tol
        # third identity
        assert abs(b - (c if sec == Sector.S1 else -c)) <= tol
        checked += 1
    assert checked >= 500


def test_monotone_decay_on_positive_axis():
    x = np.linspace(5, 30, 400)
    vals = np.abs(airy.ai(x))
    assert np.all(np.diff(vals) < 0)


@given(st.complex_numbers(max_magnitude=25, allow_nan=False, allow_infinity=False))
def test_log_and_plain_values_agree(z):
    la, pa, lp, pp = airy.airy_log(z)
    a = airy.ai(z)
    if a != 0:
        assert la == pytest.approx(math.log(abs(a)), abs=1e-12)
        assert cmath.exp(1j * pa) == pytest.approx(a / abs(a), abs=1e-10)


# --- asymptotic log form ----------------------------------------------------------

def test_log_asymptotic_at_nine():
    la, ph = airy.log_ai_asymptotic(9.0)
    assert la == pytest.approx(float(mp.log(mp.airyai(9))), abs=1e-9)
    assert la == pytest.approx(-19.8186, abs=1e-3)
    assert ph == pytest.approx(0.0, abs=1e-12)


def test_log_asymptotic_matches_at_switch_radius():
    la, _ = airy.log_ai_asymptotic(airy.R_SWITCH)
    assert la == pytest.approx(math.log(abs(airy.ai(airy.R_SWITCH))), abs=1e-6)


def test_log_asymptotic_overlap(rng):
    for _ in range(200):
        r = rng.uniform(airy.R_SWITCH, 30)
        phi = rng.uniform(-np.pi + 0.06, np.pi - 0.06)
        z = r * cmath.exp(1j * phi)
        la, _ = airy.log_ai_asymptotic(z)
        assert la == pytest.approx(float(mp.log(abs(mp.airyai(mp.mpc(z))))), abs=1e-6)


def test_log_asymptotic_on_stokes_line_has_no_exponential_term():
    # Re z^{3/2} vanishes on Arg z = +-pi/3
    for r in np.linspace(airy.R_SWITCH, 100, 40):
        z = r * cmath.exp(1j * math.pi / 3)
        assert abs(airy.principal_power(z, 1.5).real) <= 1e-12 * r ** 1.5
        la, _ = airy.log_ai_asymptotic(z)
        assert abs(la + 0.25 * math.log(r) + math.log(2 * math.sqrt(math.pi))) <= 1.0


def test_log_asymptotic_domain_errors():
    with pytest.raises(ValidationError) as e:
        airy.log_ai_asymptotic(-10.0)
    assert e.value.code == "DOMAIN"
    with pytest.raises(ValidationError):
        airy.log_ai_asymptotic(1.0)


# --- sectors and allowability ---------------------------------------------------------

def test_sector_examples():
    assert airy.sector_of(1).tag == Sector.S0
    s = airy.sector_of(-1)
    assert s.tag == Sector.STOKES_BOUNDARY and s.boundary_ray == StokesRay.ARG_PI
    assert airy.sector_of(1j).tag == Sector.S1
    assert airy.sector_of(-1j).tag == Sector.SM1
    z0 = airy.sector_of(0)
    assert z0.tag == Sector.STOKES_BOUNDARY and z0.boundary_ray is None
    assert airy.sector_of(cmath.exp(1j * math.pi / 3)).boundary_ray == StokesRay.ARG_PI_OVER_3
    assert airy.sector_of(cmath.exp(-1j * math.pi / 3)).boundary_ray == StokesRay.ARG_MINUS_PI_OVER_3


def test_negative_zero_imaginary_part_is_on_the_cut():
    assert airy.sector_of(complex(-1.0, -0.0)).boundary_ray == StokesRay.ARG_PI
    assert not airy.is_allowable(0, complex(-1.0, -0.0))


def test_allowable_examples():
    assert not airy.is_allowable(0, -1)
    assert airy.is_allowable(1, -1)
    assert all(airy.is_allowable(k, 1) for k in (-1, 0, 1))


@given(st.floats(-math.pi + 1e-6, math.pi), st.floats(0.1, 50))
def test_allowability_matches_rotated_argument(phi, r):
    z = r * cmath.exp(1j * phi)
    for k in (-1, 0, 1):
        rot = cmath.phase(cmath.exp(-2j * k * math.pi / 3) * z)
        expect = abs(rot) < math.pi - 1e-9
        if abs(abs(rot) - math.pi) > 1e-9:
            assert airy.is_allowable(k, z) == expect
