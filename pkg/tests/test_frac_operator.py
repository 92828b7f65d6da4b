from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracschrod import frac_operator as fo
from fracschrod.constants import ParameterError, ProblemParams, lambda_of_beta, solve_beta
from fracschrod.weights import RadialWeight

from oracles import gaussian_frac_laplacian

GAUSS = fo.RadialFunction(lambda r: np.exp(-r * r), "analytic", decay=math.inf, singularity=0.0)
# -Delta exp(-r^2) in three dimensions
NEG_LAP_GAUSS = fo.RadialFunction(lambda r: (6.0 - 4.0 * r * r) * np.exp(-r * r), "analytic", decay=math.inf, singularity=0.0)

# frozen regression values from the module's own refinement loop (d=3, alpha=1, delta=0.5)
C1_HALF = 0.4733686902711645
MU1_HALF_EPS01 = 0.6079869404065706


@pytest.mark.parametrize("delta", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_eigen_identity(delta, alpha):
    p = ProblemParams(alpha=alpha, delta=delta)
    beta = solve_beta(p)
    f = fo.power(3 - beta)
    lam = lambda_of_beta(beta, p)
    for r in (0.2, 1.0, 5.0):
        got = fo.frac_laplacian(f, np.array([r, 0, 0]), alpha)
        assert got == pytest.approx(lam * r ** (beta - 3 - alpha), rel=1e-2)


def test_eigen_residual_helper():
    assert fo.eigen_residual(ProblemParams(alpha=1.0, delta=0.5)) <= 1e-2


def test_constant_in_kernel():
    one = fo.RadialFunction(lambda r: np.ones_like(r), "analytic", decay=0.0, singularity=0.0)
    assert abs(fo.frac_laplacian(one, 0.7, 1.0)) < 1e-10


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
@pytest.mark.parametrize("r", [0.1, 0.8, 2.5])
def test_gaussian_against_fourier_side(alpha, r):
    assert fo.frac_laplacian(GAUSS, r, alpha) == pytest.approx(float(gaussian_frac_laplacian(r, alpha)), abs=1e-4)


def test_radial_symmetry():
    a = fo.frac_laplacian(GAUSS, np.array([1.0, 0, 0]), 1.0)
    b = fo.frac_laplacian(GAUSS, np.array([0.6, 0.8, 0.0]), 1.0)
    assert a == pytest.approx(b, rel=1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.3, 3.0))
def test_linearity(a, b, r):
    g = fo.power(1.2)
    combo = fo.combine(a, GAUSS, b, g)
    lhs = fo.frac_laplacian(combo, r, 1.0)
    rhs = a * fo.frac_laplacian(GAUSS, r, 1.0) + b * fo.frac_laplacian(g, r, 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_riesz_of_laplacian(alpha):
    for r in (0.3, 1.0, 2.0):
        got = fo.riesz_potential(NEG_LAP_GAUSS, 2 - alpha, r)
        assert got == pytest.approx(fo.frac_laplacian(GAUSS, r, alpha), abs=1e-3)


def test_riesz_far_field_of_narrow_bump():
    w = 0.1
    bump = fo.RadialFunction(lambda r: np.exp(-(r / w) ** 2), "analytic", decay=math.inf)
    mass = math.pi**1.5 * w**3
    nu = 1.0
    for r in (5.0, 20.0):
        got = fo.riesz_potential(bump, nu, r)
        assert got == pytest.approx(mass * fo.riesz_constant(nu) * r ** (nu - 3), rel=1e-3)


def test_riesz_errors():
    with pytest.raises(ParameterError):
        fo.riesz_potential(GAUSS, 3.0, 1.0)
    with pytest.raises(fo.DivergenceError):
        fo.riesz_potential(fo.power(1.0), 1.5, 1.0)


def test_measure_c1():
    w = RadialWeight.for_params(ProblemParams(alpha=1.0, delta=0.5))
    rep = fo.measure_C1_report(w)
    assert rep.value >= 0
    assert rep.value == pytest.approx(C1_HALF, rel=1e-6)
    with pytest.raises(ValueError):
        fo.measure_C1(w.rescaled(2.0))


def test_measure_mu1():
    p = ProblemParams(alpha=1.0, delta=0.5)
    w = RadialWeight.for_params(p)
    vals = [fo.measure_mu1(w, e, p) for e in (0.1, 0.01, 0.001)]
    assert max(vals) / min(vals) - 1 <= 0.2
    assert vals[1] == pytest.approx(MU1_HALF_EPS01, rel=1e-6)
    # sup |v_eps| scales like 1/s
    s = 4.0
    assert fo.measure_mu1(w.rescaled(s), 0.01, p) == pytest.approx(vals[1] / s, rel=0.05)


def test_mu1_eps_zero_continuity():
    p = ProblemParams(alpha=1.0, delta=0.5)
    w = RadialWeight.for_params(p)
    a = fo.measure_mu1_report(w, 0.0, p, r_lo=0.1).value
    b = fo.measure_mu1_report(w, 1e-6, p, r_lo=0.1).value
    assert a == pytest.approx(b, rel=1e-2)
