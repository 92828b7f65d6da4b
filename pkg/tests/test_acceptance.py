"""End-to-end acceptance run: one PASS/FAIL line per criterion (shown in the terminal summary)."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from fracschrod import free_kernel as fk
from fracschrod import frac_operator as fo
from fracschrod import verifier as v
from fracschrod.constants import ProblemParams, derive, lambda_of_beta, solve_beta
from fracschrod.perturbed_semigroup import MCConfig, duhamel_picard, feynman_kac_mc
from fracschrod.perturbed_semigroup.sector import SectorConfig
from fracschrod.perturbed_semigroup.trotter import PropagatorConfig, evolve_trotter
from fracschrod.theorem_a_lab import radial_instance, run_lab
from fracschrod.weights import RadialWeight

from conftest import record
from oracles import cauchy_3d, chapman_kolmogorov

pytestmark = pytest.mark.slow

TIMES = [0.25, 0.5, 1.0, 2.0, 4.0]


def test_criterion_1_constants():
    t0 = time.perf_counter()
    c = derive(ProblemParams(alpha=1.0, delta=1.0))
    checks = {
        "c_alpha": abs(c.c_alpha - math.sqrt(math.pi / 2)) <= 1e-10,
        "hardy": abs(c.hardy_sharp - 2 / math.pi) <= 1e-10,
        "beta": abs(c.beta - 2.0) <= 1e-10,
        "j_prime": c.j_prime == 3,
    }
    dt = time.perf_counter() - t0
    ok = all(checks.values()) and dt < 1.0
    record(1, ok, f"c_alpha={c.c_alpha:.15f} hardy={c.hardy_sharp:.15f} beta={c.beta:.15f} j'={c.j_prime:g}", dt)
    assert ok, checks


def test_criterion_2_free_kernel():
    t0 = time.perf_counter()
    p1 = ProblemParams(alpha=1.0, delta=0.0)
    r = np.linspace(0.0, 10.0, 41)
    cauchy_err = max(abs(fk.free_kernel(fk.KernelQuery(t, float(ri), p1)) - cauchy_3d(t, ri)) / cauchy_3d(t, ri)
                     for t in (0.5, 1.0, 2.0) for ri in r)
    norm_err = max(abs(fk.normalization(t, ProblemParams(alpha=a, delta=0.0)) - 1.0)
                   for a in (0.6, 1.0, 1.5) for t in (0.5, 1.0, 2.0))
    rng = np.random.default_rng(3)
    ck_err = 0.0
    for k in range(10):
        a = (0.6, 1.0, 1.5)[k % 3]
        prof = fk.profile(3, a)
        s, t = rng.uniform(0.3, 2.0, 2)
        dist = rng.uniform(0.0, 3.0)
        ck_err = max(ck_err, abs(chapman_kolmogorov(prof, s, t, dist) / float(prof(s + t, dist)) - 1.0))
    dt = time.perf_counter() - t0
    ok = cauchy_err <= 1e-6 and norm_err <= 1e-6 and ck_err <= 1e-3 and dt < 60
    record(2, ok, f"cauchy rel err={cauchy_err:.2e} normalization err={norm_err:.2e} CK rel err={ck_err:.2e}", dt)
    assert ok


def test_criterion_3_eigen_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for delta in (0.3, 0.5, 1.0):
        for alpha in (0.6, 1.0, 1.5):
            p = ProblemParams(alpha=alpha, delta=delta)
            beta = solve_beta(p)
            lam = lambda_of_beta(beta, p)
            f = fo.power(3 - beta)
            for r in np.geomspace(0.2, 5.0, 5):
                got = fo.frac_laplacian(f, np.array([r, 0.0, 0.0]), alpha)
                worst = max(worst, abs(got / (lam * r ** (beta - 3 - alpha)) - 1.0))
    dt = time.perf_counter() - t0
    ok = worst <= 0.01 and dt < 300
    record(3, ok, f"max rel err={worst:.2e} over 9 (delta, alpha) pairs", dt)
    assert ok


def _cross_targets():
    rng = np.random.default_rng(20)
    u = rng.normal(size=(20, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    return u * np.geomspace(0.5, 3.0, 20)[:, None]


def test_criterion_4_cross_validation():
    t0 = time.perf_counter()
    x = np.array([0.7, 0.1, 0.0])
    ys = _cross_targets()
    p = ProblemParams(alpha=1.0, delta=0.5, eps=0.01)
    tr = evolve_trotter(x, 1.0, PropagatorConfig(L=8, N=128, dt=0.05), p, ys)
    du = duhamel_picard(x, ys, 1.0, p)
    T, D = tr.values.ravel(), du.values.ravel()
    budget = tr.error.ravel() + du.error.ravel()
    td = np.abs(T - D) / budget
    mc = feynman_kac_mc(x, ys[:10], 1.0, MCConfig(paths=100_000, estimator="last_jump", last=0.2), p)
    zT = np.abs(mc.estimate - T[:10]) / mc.std_error
    zD = np.abs(mc.estimate - D[:10]) / mc.std_error
    dt = time.perf_counter() - t0
    ok = bool(np.all(td <= 1.0) and np.all(zT <= 3.0) and np.all(zD <= 3.0) and dt < 900)
    record(4, ok, f"max |T-D|/budget={td.max():.3f} max MC z (Trotter)={zT.max():.2f} (Duhamel)={zD.max():.2f}", dt)
    assert ok


@pytest.fixture(scope="module")
def pair_grids():
    """Coarse and refined pair tables for delta in {0.5, 1}, shared by criteria 5 and 6."""
    out = {}
    for delta in (0.5, 1.0):
        p = ProblemParams(alpha=1.0, delta=delta)
        t0 = time.perf_counter()
        coarse = v.kernel_grid(p, TIMES, 9, SectorConfig(n=800))
        fine = v.kernel_grid(p, TIMES, 17, SectorConfig(n=1200))
        out[delta] = (p, coarse, fine, time.perf_counter() - t0)
    return out


def test_criterion_5_weighted_nash(pair_grids):
    t0 = time.perf_counter()
    ok, parts, build = True, [], 0.0
    for delta, (p, coarse, fine, secs) in pair_grids.items():
        build += secs
        r = v.check_weighted_nash(coarse, RadialWeight.for_params(p), fine)
        c = r.constants
        good = r.verdict and c["refinement_change"] <= 0.10 and c["t_drift"] <= 0.10
        ok &= bool(good)
        parts.append(f"delta={delta:g}: c={c['c']:.4f} refine={c['refinement_change']:.1e} drift={c['t_drift']:.1e}")
        if delta == 1.0:
            g = v.check_unweighted_growth(coarse)
            ok &= bool(g.verdict and g.constants["growth"] >= 3.0)
            parts.append(f"unweighted growth={g.constants['growth']:.1f}")
    dt = time.perf_counter() - t0 + build
    record(5, ok, "; ".join(parts), dt)
    assert ok


def test_criterion_6_two_sided(pair_grids):
    t0 = time.perf_counter()
    ok, parts = True, []
    for delta, (p, coarse, fine, secs) in pair_grids.items():
        r = v.check_two_sided(coarse, RadialWeight.for_params(p), fine)
        c = r.constants
        good = r.verdict and c["spread"] <= 100 and c["min_change"] <= 0.10 and c["max_change"] <= 0.10
        ok &= bool(good)
        parts.append(f"delta={delta:g}: max/min={c['spread']:.2f} [{c['C_lower']:.3f}, {c['C_upper']:.3f}]")
    dt = time.perf_counter() - t0 + sum(g[3] for g in pair_grids.values())
    ok &= dt < 1800
    record(6, ok, "; ".join(parts), dt)
    assert ok


def test_criterion_7_l1():
    t0 = time.perf_counter()
    r = v.check_l1_bound(ProblemParams(alpha=1.0, delta=0.5))
    flat = v.check_l1_bound(ProblemParams(alpha=1.0, delta=0.0), flat=True)
    c_flat = flat.constants["c_hat"]
    ok = bool(r.verdict and r.constants["variation"] <= 0.20 and c_flat <= 0.05)
    dt = time.perf_counter() - t0
    record(7, ok, f"c_hat={r.constants['c_hat']:.4f} variation={r.constants['variation']:.3f} delta=0 c_hat={c_flat:.1e}", dt)
    assert ok


def test_criterion_8_lower_bound():
    t0 = time.perf_counter()
    r = v.check_lower_prop(ProblemParams(alpha=1.0, delta=0.5), s=1.0, t_corollary=1.0, window=(0.2, 5.0))
    c = r.constants
    ok = bool(r.verdict and math.isfinite(c["mu_hat"]) and r.min >= c["threshold"])
    dt = time.perf_counter() - t0
    record(8, ok, f"mu_hat={c['mu_hat']:.4f} window fraction min={r.min:.4f} >= exp(-mu-1)={c['threshold']:.4f}", dt)
    assert ok


def test_criterion_9_hardy():
    t0 = time.perf_counter()
    fam = v.default_family(1.0)
    r = v.check_hardy_rellich(ProblemParams(alpha=1.0, delta=0.5), fam)
    sharp = 2 / math.pi
    ok = bool(len(fam) >= 20 and r.verdict and r.min >= sharp * (1 - 1e-3) and r.min <= sharp * 1.05)
    dt = time.perf_counter() - t0
    record(9, ok, f"{len(fam)} functions, min quotient={r.min:.6f} (2/pi={sharp:.6f})", dt)
    assert ok


def test_criterion_10_theorem_a_lab():
    t0 = time.perf_counter()
    res = run_lab(radial_instance(200), radial_instance(400))
    nie = res["NIE"]
    inv = res["invariants"]
    c1 = res["M3"]["c_1"]
    positive = res["M1"]["c_S"] > 0 and res["M1"]["holds"] and all(c > 0 for c in c1.values()) and res["M4"]["c_0"] > 0
    m2 = bool(res["M2"]["holds"])
    C = nie["constants"]["C"]
    drift = nie["constants"]["drift"]
    worst_inv = max(inv.values())
    ok = bool(positive and m2 and math.isfinite(C) and drift <= 0.25 and worst_inv <= 1e-10)
    dt = time.perf_counter() - t0
    record(10, ok, f"c_S={res['M1']['c_S']:.4f} c_1 max={max(c1.values()):.4f} c_0={res['M4']['c_0']:.3f} "
                   f"NIE C={C:.4f} drift={drift:.1e} invariants={worst_inv:.1e}", dt)
    assert ok
