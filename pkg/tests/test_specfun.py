from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fracschrod import specfun as sf

# arbitrary-precision oracle values (mpmath, 40 digits), frozen
GAMMA_7_25 = 1155.381013919989687202703767970556578774
LOG_GAMMA_100_5 = 361.4355404677776215552519127025207628588


def test_gamma_trivial_values():
    assert sf.gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert sf.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_oracle():
    assert sf.gamma(7.25) == pytest.approx(GAMMA_7_25, rel=1e-13)


def test_log_gamma_values():
    assert sf.log_gamma(1.0) == 0.0
    assert abs(sf.log_gamma(2.0)) < 1e-15
    assert sf.log_gamma(100.5) == pytest.approx(LOG_GAMMA_100_5, rel=1e-14)


def test_log_gamma_large_argument_finite():
    assert math.isfinite(sf.log_gamma(1e6))


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles(x):
    with pytest.raises(sf.PoleError):
        sf.gamma(x)


def test_gamma_overflow_and_domain():
    with pytest.raises(OverflowError):
        sf.gamma(200.0)
    with pytest.raises(ValueError):
        sf.log_gamma(0.0)
    with pytest.raises(ValueError):
        sf.gamma(float("nan"))


@given(st.floats(0.1, 30.0))
def test_gamma_recurrence(x):
    assert sf.gamma(x + 1) == pytest.approx(x * sf.gamma(x), rel=1e-12)


@given(st.floats(0.01, 150.0))
def test_exp_log_gamma(x):
    assert math.exp(sf.log_gamma(x)) == pytest.approx(sf.gamma(x), rel=1e-12)


@given(st.floats(-9.9, 9.9).filter(lambda x: abs(x - round(x)) > 1e-3 or x > 0))
def test_gamma_sign_log_matches_scipy(x):
    s, lg = sf.gamma_sign_log(x)
    assert s * math.exp(lg) == pytest.approx(special.gamma(x), rel=1e-11)


def test_gamma_ratio_cancellation():
    # Gamma(171.5)/Gamma(170.5) = 170.5 though both overflow individually
    assert sf.gamma_ratio([171.5], [170.5]) == pytest.approx(170.5, rel=1e-11)


def test_bessel_closed_forms():
    assert abs(sf.bessel_j(0.5, math.pi)) < 1e-15
    assert sf.bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-14)
    assert abs(sf.bessel_j(0.0, 2.4048255577)) < 1e-10


@given(st.floats(1e-6, 100.0))
def test_half_order_sine_identity(z):
    assert abs(sf.bessel_j(0.5, z) * math.sqrt(math.pi * z / 2) - math.sin(z)) <= 1e-10


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("z", [1e-3, 0.7, 5.0, 37.2, 410.0, 9999.0])
def test_bessel_against_scipy(nu, z):
    ref = special.jv(nu, z)
    assert sf.bessel_j(nu, z) == pytest.approx(ref, rel=1e-10, abs=1e-15)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_spherical_jn_against_scipy(n):
    import numpy as np

    z = np.array([1e-4, 0.3, 2.0, 17.0, 300.0])
    assert np.allclose(sf.spherical_jn(n, z), special.spherical_jn(n, z), rtol=1e-10, atol=1e-16)
