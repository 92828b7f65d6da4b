from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma as G

from fracschrod import constants as C
from fracschrod.constants import ParameterError, ProblemParams

# beta root for d=3, alpha=1 found by mpmath bisection (40 digits), frozen
BETA_HALF = 2.742019296407103180807610096916258635299
BETA_03 = 2.861042463355680025602561724011545277832


def closed_lambda(beta, d, a):
    return 2**a * G(beta / 2) * G((d - beta + a) / 2) / (G((beta - a) / 2) * G((d - beta) / 2))


def test_gamma_d_values():
    assert C.gamma_d(1, 3) == pytest.approx(2 * math.pi**2, rel=1e-13)
    assert C.gamma_d(1.5, 3) == pytest.approx(2**1.5 * math.pi**1.5, rel=1e-13)
    with pytest.raises(ValueError):
        C.gamma_d(0, 3)
    with pytest.raises(ValueError):
        C.gamma_d(3, 3)


def test_c_alpha_and_hardy():
    assert C.c_constant(0.5, 2, 3) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-10)
    assert C.c_alpha(1.0, 3) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-10)
    assert C.hardy_sharp(1.0, 3) == pytest.approx(2 / math.pi, abs=1e-10)
    with pytest.raises(ValueError):
        C.c_constant(1.0, 3.0, 3)


@given(st.integers(3, 9), st.floats(0.1, 1.9))
def test_hardy_is_inverse_square_of_c_alpha(d, a):
    alt = 2**a * (G((d + a) / 4) / G((d - a) / 4)) ** 2
    assert C.hardy_sharp(a, d) == pytest.approx(C.c_alpha(a, d) ** -2, rel=1e-11)
    assert C.hardy_sharp(a, d) == pytest.approx(alt, rel=1e-11)


def test_lambda_values():
    p = ProblemParams(alpha=1.0)
    assert C.lambda_of_beta(2.0, p) == pytest.approx(2 / math.pi, rel=1e-12)
    assert C.lambda_of_beta(3 - 1e-9, p) < 1e-8
    with pytest.raises(ValueError):
        C.lambda_of_beta(0.5, p)


@given(st.integers(3, 7), st.floats(0.1, 1.9))
def test_lambda_decreasing_and_closed_form(d, a):
    p = ProblemParams(d=d, alpha=a)
    bs = np.linspace((d + a) / 2, d - 1e-6, 100)
    lam = np.array([C.lambda_of_beta(b, p) for b in bs])
    assert np.all(np.diff(lam) < 0)
    for b in bs[::17]:
        assert C.lambda_of_beta(b, p) == pytest.approx(closed_lambda(b, d, a), rel=1e-11)


def test_solve_beta_values():
    assert C.solve_beta(ProblemParams(delta=1.0)) == pytest.approx(2.0, abs=1e-10)
    assert C.solve_beta(ProblemParams(delta=0.5)) == pytest.approx(BETA_HALF, abs=1e-11)
    assert C.solve_beta(ProblemParams(delta=0.3)) == pytest.approx(BETA_03, abs=1e-11)
    assert C.solve_beta(ProblemParams(delta=1e-9)) > 3 - 1e-3


@given(st.integers(3, 7), st.floats(0.1, 1.9), st.floats(0.01, 1.0))
def test_solve_beta_roundtrip(d, a, delta):
    p = ProblemParams(d=d, alpha=a, delta=delta)
    b = C.solve_beta(p)
    assert (d + a) / 2 - 1e-12 <= b < d
    assert C.lambda_of_beta(b, p) == pytest.approx(delta * C.hardy_sharp(a, d), rel=1e-10)


def test_derived_constants():
    dc = C.derive(ProblemParams(alpha=1.0, delta=1.0))
    assert dc.j == pytest.approx(1.5)
    assert dc.j_prime == 3
    assert dc.beta == pytest.approx(2.0, abs=1e-10)
    assert dc.coupling == pytest.approx(2 / math.pi)
    # integrability: 2(d - beta) + alpha <= d, equality at delta = 1
    assert 2 * (3 - dc.beta) + 1 == pytest.approx(3.0, abs=1e-9)
    dh = C.derive(ProblemParams(alpha=1.0, delta=0.5))
    assert 2 * (3 - dh.beta) + 1 < 3


def test_potential():
    p = ProblemParams(alpha=1.0, delta=0.5)
    dc = C.derive(p)
    assert C.potential(np.array([dc.R_half, 0, 0]), p) == pytest.approx(0.5, rel=1e-13)
    p1 = p.with_(eps=1.0)
    assert C.potential(np.zeros(3), p1) == pytest.approx(0.5 * 2 / math.pi)
    with pytest.raises(ZeroDivisionError):
        C.potential(np.zeros(3), p)


@given(st.floats(0.01, 10.0), st.floats(1e-4, 1.0), st.floats(1e-4, 1.0))
def test_potential_monotone_in_eps(r, e1, e2):
    lo, hi = sorted((e1, e2))
    p = ProblemParams(alpha=1.0, delta=0.5)
    x = np.array([r, 0.0, 0.0])
    assert C.potential(x, p.with_(eps=hi)) <= C.potential(x, p.with_(eps=lo)) <= C.potential(x, p)


@pytest.mark.parametrize("kw", [dict(d=2), dict(alpha=2.0), dict(alpha=0.0), dict(delta=1.5), dict(eps=-1.0)])
def test_params_rejected(kw):
    with pytest.raises(ParameterError):
        ProblemParams(**kw)


def test_guard_band():
    with pytest.raises(ParameterError):
        ProblemParams(alpha=0.01).check_guard_band()
    ProblemParams(alpha=1.0).check_guard_band()
