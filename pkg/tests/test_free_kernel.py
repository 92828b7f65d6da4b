from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracschrod import free_kernel as fk
from fracschrod.constants import ProblemParams

from oracles import cauchy_3d, chapman_kolmogorov

P1 = ProblemParams(alpha=1.0, delta=0.5)


def test_closed_form_points():
    assert fk.free_kernel(fk.KernelQuery(1.0, 0.0, P1)) == pytest.approx(1 / math.pi**2, rel=1e-8)
    assert fk.free_kernel(fk.KernelQuery(1.0, 1.0, P1)) == pytest.approx(1 / (4 * math.pi**2), rel=1e-8)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_cauchy_agreement(t):
    r = np.linspace(0.0, 10.0, 41)
    got = np.array([fk.fourier_bessel(t, ri, 3, 1.0)[0] for ri in r])
    assert np.max(np.abs(got / cauchy_3d(t, r) - 1)) <= 1e-6
    prof = fk.profile(3, 1.0)(t, r)
    assert np.max(np.abs(prof / cauchy_3d(t, r) - 1)) <= 1e-6


def test_gaussian_limit():
    # alpha = 2 is outside the guard band; the raw quadrature still reproduces the heat kernel
    for r in (0.0, 0.5, 2.0):
        got = fk.fourier_bessel(1.0, r, 3, 2.0)[0]
        assert got == pytest.approx(float(fk.gaussian_kernel(1.0, r)), rel=1e-7)


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_normalization(alpha, t):
    assert fk.normalization(t, ProblemParams(alpha=alpha)) == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.1, 10.0), st.floats(0.0, 20.0), st.sampled_from([0.6, 1.0, 1.5]))
def test_scaling_identity(t, r, alpha):
    assert fk.scaling_check(t, r, ProblemParams(alpha=alpha)) <= 1e-8


def test_scaling_cauchy_case():
    assert fk.scaling_check(4.0, 2.0, P1) <= 1e-10
    assert fk.scaling_check(1.0, 3.0, P1) == 0.0


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_positive_and_envelope_comparable(alpha):
    p = ProblemParams(alpha=alpha)
    r = np.concatenate([[0.0], np.geomspace(1e-3, 100.0, 60)])
    for t in (0.1, 1.0, 10.0):
        vals = fk.profile(3, alpha)(t, r)
        assert np.all(vals > 0)
        ratio = vals / fk.envelope_values(t, r, 3, alpha)
        # the comparability constant is measured, not prescribed; it must be finite
        assert np.isfinite(ratio).all() and ratio.min() > 0


def test_envelope_branches():
    assert fk.envelope(fk.KernelQuery(1.0, 0.0, P1)) == 1.0
    assert fk.envelope(fk.KernelQuery(1.0, 10.0, P1)) == pytest.approx(1e-4)


def test_query_validation():
    with pytest.raises(ValueError):
        fk.KernelQuery(0.0, 1.0, P1)
    with pytest.raises(ValueError):
        fk.KernelQuery(1.0, -1.0, P1)


def test_tail_series_matches_quadrature():
    for r in (8.0, 20.0):
        val = fk.tail_series(1.0, r, 3, 0.8)
        val = val[0] if isinstance(val, tuple) else val
        assert val == pytest.approx(fk.fourier_bessel(1.0, r, 3, 0.8)[0], rel=1e-7)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_chapman_kolmogorov(alpha):
    prof = fk.profile(3, alpha)
    rng = np.random.default_rng(3)
    for _ in range(3):
        s, t = rng.uniform(0.3, 2.0, 2)
        a = rng.uniform(0.0, 3.0)
        lhs = chapman_kolmogorov(prof, s, t, a)
        assert lhs == pytest.approx(float(prof(s + t, a)), rel=1e-3)
