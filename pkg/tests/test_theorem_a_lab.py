from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracschrod import theorem_a_lab as lab
from fracschrod.constants import ProblemParams


@pytest.fixture(scope="module")
def radial():
    return lab.radial_instance(100, params=ProblemParams(alpha=1.0, delta=0.5))


@given(st.floats(0.2, 1.8), st.floats(0.3, 3.0))
def test_centred_difference_symbol(alpha, theta):
    g = lab.centred_difference_coeffs(alpha, 40_000)
    k = np.arange(1, len(g))
    sym = g[0] + 2 * np.sum(g[1:] * np.cos(k * theta))
    assert sym == pytest.approx(abs(2 * math.sin(theta / 2)) ** alpha, abs=2e-3)


def test_centred_difference_alpha_two_is_second_difference():
    g = lab.centred_difference_coeffs(2.0, 5)
    assert np.allclose(g, [2, -1, 0, 0, 0], atol=1e-14)


@pytest.mark.parametrize("n", [4, 10])
def test_identity_generator_sobolev_constant(n):
    spec = {"matrix": np.eye(n).tolist(), "mu": [1.0 / n] * n, "j": 1.5}
    ds = lab.custom_instance(spec)
    holds, c_s, _ = lab.check_m1(ds, seed=1)
    # the minimiser is a delta vector: mu / mu^{1/j}
    assert holds and c_s == pytest.approx((1.0 / n) ** (1 - 1 / 1.5), rel=1e-6)


def test_custom_validation(tmp_path):
    with pytest.raises(lab.LabError):
        lab.custom_instance({"matrix": [[1.0, 2.0], [0.0, 1.0]], "mu": [1, 1], "j": 1.5})
    with pytest.raises(lab.LabError):
        lab.custom_instance({"matrix": [[-1.0, 0.0], [0.0, 1.0]], "mu": [1, 1], "j": 1.5})
    with pytest.raises(lab.LabError):
        lab.custom_instance({"matrix": [[1.0]], "mu": [1.0], "j": 1.0})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"matrix": [[1.0, -1.0], [-1.0, 1.0]], "mu": [1.0, 1.0], "weights": {"1": [1.0, 2.0]}, "j": 3.0}))
    ds = lab.load_custom(str(path))
    assert np.allclose(ds.phi(7.0), [1.0, 2.0])


def test_cycle_has_no_sobolev_constant():
    holds, c_s, _ = lab.check_m1(lab.cycle_instance(20))
    assert not holds and c_s < 1e-12


def test_cycle_invariants():
    ds = lab.cycle_instance(30)
    inv = lab.invariants(ds)
    assert max(inv.values()) <= 1e-10
    K = ds.kernel(0.7)
    assert np.allclose(K, K.T, atol=1e-14)
    assert np.all(np.sum(K * ds.mu[None, :], axis=1) == pytest.approx(1.0))  # conservative walk


def test_radial_hypotheses(radial):
    holds, c_s, _ = lab.check_m1(radial, trials=50)
    assert holds and c_s > 0
    assert lab.check_m2(radial)["holds"]
    assert lab.check_m4(radial) == pytest.approx(0.5)
    for s in (0.5, 1.0, 2.0):
        assert 0 < lab.check_m3(radial, s) < math.inf
    with pytest.raises(lab.LabError):
        lab.check_m3(radial, 1.0, [2.0])


def test_radial_invariants_and_positivity(radial):
    inv = lab.invariants(radial)
    assert max(inv.values()) <= 1e-10
    K = radial.kernel(1.0)
    assert np.all(K > -1e-12)
    assert np.allclose(K, K.T, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("s,t", [(1.0, 0.5), (2.0, 1.0), (0.5, 0.25)])
def test_squaring_bound(radial, s, t):
    lhs, rhs = lab.squaring_bound(radial, s, t)
    assert lhs <= rhs * (1 + 1e-10)


def test_nie_report(radial):
    rep = lab.check_nie(radial, np.geomspace(0.1, 2.5, 6), lab.radial_instance(200))
    assert rep.verdict and 0 < rep.max < math.inf
    assert rep.constants["unweighted_finer"] > rep.constants["unweighted"]


def test_smoothing_finite(radial):
    out = lab.check_smoothing_12(radial, 1.0)
    assert out["finite"] and out["c"] > 0
