"""Independent reference computations used by the tests (closed forms and plain quadrature)."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def cauchy_3d(t, r):
    """alpha = 1, d = 3 kernel: t / (pi^2 (t^2 + r^2)^2)."""
    r = np.asarray(r, dtype=float)
    return t / (math.pi**2 * (t * t + r * r) ** 2)


def gaussian_frac_laplacian(r, alpha, d=3):
    """(-Delta)^{a/2} exp(-|x|^2) = 2^a Gamma((d+a)/2)/Gamma(d/2) 1F1((d+a)/2; d/2; -r^2)."""
    a = alpha
    return 2.0**a * special.gamma((d + a) / 2) / special.gamma(d / 2) * special.hyp1f1((d + a) / 2, d / 2, -np.asarray(r) ** 2)


def chapman_kolmogorov(p, s, t, a, n_rho=4000, n_q=96):
    """int p_s(|z|) p_t(|z - a e|) dz in three dimensions, for a source at 0 and target at distance a.

    p(t, r) must broadcast. rho runs over a log grid split at rho = a. For fixed rho the polar
    angle is traded for q = |z - a e| (dq q / (rho a)), integrated by Gauss-Legendre in log q so
    that a sharply peaked p_t near q = 0 is resolved.
    """
    g, wg = np.polynomial.legendre.leggauss(n_q)

    def inner(rr):
        if a == 0.0:
            return 2.0 * float(p(t, rr))
        lo, hi = math.log(max(abs(rr - a), 1e-9)), math.log(rr + a)
        lq = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
        q = np.exp(lq)
        return 0.5 * (hi - lo) * float(np.sum(wg * p(t, q) * q * q)) / (rr * a)

    total = 0.0
    edges = [1e-6, a, 1e5] if a > 1e-6 else [1e-6, 1e5]
    for lo, hi in zip(edges[:-1], edges[1:]):
        lr = np.linspace(math.log(lo), math.log(hi), n_rho // len(edges))
        rho = np.exp(lr)
        f = 2 * math.pi * rho**3 * p(s, rho) * np.array([inner(rr) for rr in rho])
        total += float(np.trapezoid(f, lr))
    return total
