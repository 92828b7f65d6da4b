"""Gamma, log-Gamma and Bessel J on the real line.

Gamma and log-Gamma are thin, contract-enforcing wrappers around the C
library implementations exposed by :mod:`math`; Bessel functions of
half-integer order are evaluated from their trigonometric closed forms,
which is what the odd-dimensional radial Fourier inversions need.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp


class PoleError(ValueError):
    """Argument lies on the pole set {0, -1, -2, ...} of Gamma."""


def _is_pole(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma: non-finite argument {x!r}")
    if _is_pole(x):
        raise PoleError(f"gamma: pole at {x!r}")
    try:
        return math.gamma(x)
    except OverflowError as exc:
        raise OverflowError(f"gamma({x!r}) overflows; use log_gamma") from exc


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0; never overflows on (0, 1e300]."""
    x = float(x)
    if not (x > 0) or not math.isfinite(x):
        raise ValueError(f"log_gamma: domain is x > 0, got {x!r}")
    return math.lgamma(x)


def gamma_sign_log(x: float) -> tuple[int, float]:
    """Return (sign, ln|Gamma(x)|) for any real x off the pole set."""
    x = float(x)
    if _is_pole(x):
        raise PoleError(f"gamma: pole at {x!r}")
    if x > 0:
        return 1, math.lgamma(x)
    # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    s = math.sin(math.pi * x)
    sign = 1 if s > 0 else -1
    return sign, math.log(math.pi) - math.log(abs(s)) - math.lgamma(1.0 - x)


def gamma_ratio(num: list[float], den: list[float]) -> float:
    """prod Gamma(num) / prod Gamma(den), accumulated in log space."""
    sign, acc = 1, 0.0
    for a in num:
        s, v = gamma_sign_log(a)
        sign *= s
        acc += v
    for b in den:
        s, v = gamma_sign_log(b)
        sign *= s
        acc -= v
    return sign * math.exp(acc)


def _half_integer_order(nu: float) -> int | None:
    k = nu - 0.5
    if k >= 0 and float(k).is_integer():
        return int(k)
    return None


def spherical_jn(n: int, z):
    """Spherical Bessel j_n(z) = sqrt(pi/(2z)) J_{n+1/2}(z) for z >= 0.

    Closed forms for n <= 1 with series near the origin; upward recurrence
    for z > n, downward (Miller) normalisation otherwise.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 0.5
    zs = z[small]
    if zs.size:
        # power series; 12 terms are ample for z < 0.5
        c = math.exp(n * math.log(2.0) + math.lgamma(n + 1) - math.lgamma(2 * n + 2))
        zn = zs**n if n else np.ones_like(zs)
        term = np.ones_like(zs)
        acc = np.ones_like(zs)
        for k in range(1, 12):
            term = term * (-0.5 * zs * zs) / (k * (2 * n + 2 * k + 1))
            acc = acc + term
        out[small] = c * zn * acc
    zb = z[~small]
    if zb.size:
        out[~small] = _sph_jn_large(n, zb)
    return out


def _sph_jn_large(n: int, z: np.ndarray) -> np.ndarray:
    s, c = np.sin(z), np.cos(z)
    j0 = s / z
    if n == 0:
        return j0
    j1 = s / z**2 - c / z
    if n == 1:
        return j1
    up = z > n
    res = np.empty_like(z)
    if up.any():
        a, b = j0[up], j1[up]
        zu = z[up]
        for k in range(1, n):
            a, b = b, (2 * k + 1) / zu * b - a
        res[up] = b
    if (~up).any():
        res[~up] = _sph_jn_miller(n, z[~up], j0[~up], j1[~up])
    return res


def _sph_jn_miller(n: int, z: np.ndarray, j0: np.ndarray, j1: np.ndarray) -> np.ndarray:
    start = n + 20 + int(np.max(z)) + 10
    f_next = np.zeros_like(z)
    f = np.full_like(z, 1e-300)
    target = None
    for k in range(start, 0, -1):
        f_prev = (2 * k + 1) / z * f - f_next
        f_next, f = f, f_prev
        if k - 1 == n:
            target = f.copy()
        big = np.abs(f) > 1e250
        if big.any():
            f[big] *= 1e-250
            f_next[big] *= 1e-250
            if target is not None:
                target[big] *= 1e-250
    # f now holds the unnormalised j_0; normalise against the stabler of j0, j1
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(f == 0, 1.0, f), j1 / np.where(f_next == 0, 1.0, f_next))
    return target * scale


def bessel_j(nu: float, z):
    """J_nu(z) for nu >= 0 and real z >= 0 (scalar or array).

    Half-integer orders use the closed forms J_{n+1/2}(z) = sqrt(2z/pi) j_n(z);
    other orders defer to the Amos routines in :mod:`scipy.special`.
    """
    if nu < 0:
        raise ValueError("bessel_j: order must be >= 0")
    za = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(za)):
        raise ValueError("bessel_j: non-finite argument")
    if np.any(za < 0):
        raise ValueError("bessel_j: argument must be >= 0")
    n = _half_integer_order(nu)
    if n is not None:
        res = np.sqrt(2.0 * za / math.pi) * spherical_jn(n, za)
    else:
        res = _sp.jv(nu, za)
    return float(res) if np.ndim(z) == 0 else res
