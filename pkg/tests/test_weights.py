from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracschrod.constants import ProblemParams
from fracschrod.weights import RadialWeight, WeightError


def weight(delta=1.0, alpha=1.0, d=3, s=1.0):
    return RadialWeight.for_params(ProblemParams(d=d, alpha=alpha, delta=delta), s=s)


def test_branches():
    w = weight(1.0)  # beta = 2
    assert w.eta(0.5) == pytest.approx(2.0, rel=1e-12)
    assert w.eta(3.0) == 0.5
    assert w.eta(1.0) == pytest.approx(1.0, abs=1e-14)


def test_phi_values():
    for s in (0.3, 1.0, 5.0):
        w = weight(1.0, s=s)
        assert w.phi(np.array([2 * s, 0, 0])) == pytest.approx(0.5)
        assert w.phi(np.array([0, s / 2, 0])) == pytest.approx(2.0 ** (3 - w.beta), rel=1e-12)
    with pytest.raises(WeightError):
        weight().phi(np.zeros(3))
    with pytest.raises(WeightError):
        weight().eta(0.0)


@pytest.mark.parametrize("delta", [0.01, 0.3, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
def test_monotone_and_lower_bound(delta, alpha):
    w = weight(delta, alpha)
    r = np.linspace(1e-3, 10.0, 10_000)
    e = w.eta(r)
    assert np.all(np.diff(e) <= 1e-15)
    assert e.min() >= 0.5 - 1e-15


@pytest.mark.parametrize("delta", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("junction", [1.0, 2.0])
def test_c2_junctions(delta, junction):
    w = weight(delta)
    h = 1e-6
    for nd in (0, 1, 2):
        left, right = w.eta(junction - h, nd), w.eta(junction + h, nd)
        assert abs(left - right) < 1e-4 * max(1.0, abs(left))
    # the one-sided derivative values agree with the prescribed data at r = 1
    k = w.exponent
    if junction == 1.0:
        assert w.eta(1.0 + 1e-12, 1) == pytest.approx(-k, rel=1e-6)
        assert w.eta(1.0 + 1e-12, 2) == pytest.approx(k * (k + 1), rel=1e-6)
    # finite-difference second derivative has no jump
    fd = lambda r: (w.eta(r + h) - 2 * w.eta(r) + w.eta(r - h)) / h**2
    g = 1e-3
    assert abs(fd(junction - g) - fd(junction + g)) < 0.05 * max(1.0, abs(fd(junction - g)))


@given(st.floats(1.02, 1.98), st.sampled_from([0.3, 0.5, 1.0]))
def test_derivatives_match_finite_differences(r, delta):
    w = weight(delta)
    h = 1e-5
    assert w.eta(r, 1) == pytest.approx((w.eta(r + h) - w.eta(r - h)) / (2 * h), rel=1e-5, abs=1e-8)
    assert w.eta(r, 2) == pytest.approx((w.eta(r + h, 1) - w.eta(r - h, 1)) / (2 * h), rel=1e-5, abs=1e-6)


@given(
    st.lists(st.floats(-5, 5), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
    st.floats(0.01, 100.0),
    st.sampled_from([0.5, 1.0, 1.5]),
)
def test_scaling(x, s, alpha):
    w = weight(0.5, alpha)
    x = np.array(x)
    assert w.phi(x, s=s) == pytest.approx(w.phi(s ** (-1 / alpha) * x, s=1.0), rel=1e-14)


def test_inf_over_scales():
    w = weight(0.7)
    pts = np.geomspace(1e-3, 1e3, 200)
    vals = [w.phi(np.array([r, 0, 0]), s=s) for r in pts for s in (1e-2, 1.0, 1e2)]
    assert min(vals) >= 0.5


@pytest.mark.parametrize("delta", [0.5, 1.0])
def test_annulus_integrability(delta):
    w = weight(delta)
    for a, b in ((1e-3, 0.5), (0.2, 3.0), (1.0, 10.0)):
        for p in (2, -2):
            val, err = integrate.quad(lambda r: w.eta(r) ** p * 4 * math.pi * r * r, a, b, points=[1, 2] if a < 1 < b else None, limit=200)
            assert math.isfinite(val) and val > 0


def test_flat_weight():
    w = RadialWeight.for_params(ProblemParams(delta=0.5), flat=True)
    assert np.all(w.eta(np.array([0.01, 1.5, 7.0])) == 0.5)
