"""Constants of the fractional Hardy operator (-Delta)^{a/2} - delta c_a^{-2} |x|^{-a}.

Everything here is a closed-form Gamma quotient or a one-dimensional root,
computed in log space so that large dimensions do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .specfun import PoleError, gamma_sign_log, log_gamma

ALPHA_GUARD = (0.05, 1.95)


class ParameterError(ValueError):
    pass


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemParams:
    """The operator's defining scalars.

    ``delta = 0`` is accepted as the free baseline (no potential); the
    operator regime proper is ``0 < delta <= 1``.
    """

    d: int = 3
    alpha: float = 1.0
    delta: float = 0.5
    eps: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ParameterError(f"d must be an integer >= 3, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not (0.0 < self.alpha < 2.0):
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if not (0.0 <= self.delta <= 1.0):
            raise ParameterError(f"delta must lie in [0, 1], got {self.delta!r}")
        if not (self.eps >= 0.0):
            raise ParameterError(f"eps must be >= 0, got {self.eps!r}")

    def with_(self, **kw) -> "ProblemParams":
        return ProblemParams(**{**asdict(self), **kw})

    def check_guard_band(self):
        lo, hi = ALPHA_GUARD
        if not (lo <= self.alpha <= hi):
            raise ParameterError(f"alpha={self.alpha} outside the quadrature guard band {ALPHA_GUARD}")


def gamma_d(a: float, d: int) -> float:
    """2^a pi^{d/2} Gamma(a/2) / Gamma(d/2 - a/2)."""
    try:
        s1, l1 = gamma_sign_log(a / 2.0)
        s2, l2 = gamma_sign_log(d / 2.0 - a / 2.0)
    except PoleError as exc:
        raise PoleError(f"gamma_d({a}, {d}): {exc}") from exc
    return s1 * s2 * math.exp(a * math.log(2.0) + 0.5 * d * math.log(math.pi) + l1 - l2)


def c_constant(a: float, p: float, d: int) -> float:
    """gamma(d/p - a) / gamma(d/p), defined for 1 < p < d/a."""
    if not (1.0 < p < d / a):
        raise ParameterError(f"c_constant requires 1 < p < d/a = {d / a}, got p={p}")
    return gamma_d(d / p - a, d) / gamma_d(d / p, d)


def c_alpha(alpha: float, d: int) -> float:
    return c_constant(alpha / 2.0, 2.0, d)


def hardy_sharp(alpha: float, d: int) -> float:
    """Sharp fractional Hardy constant 2^a [Gamma((d+a)/4) / Gamma((d-a)/4)]^2."""
    return math.exp(alpha * math.log(2.0) + 2.0 * (log_gamma((d + alpha) / 4.0) - log_gamma((d - alpha) / 4.0)))


def lambda_of_beta(beta: float, params: ProblemParams) -> float:
    """gamma(beta) / gamma(beta - alpha) for alpha < beta < d.

    This is the multiplier in (-Delta)^{a/2} |x|^{beta-d} = lambda |x|^{beta-d-a}.
    """
    d, a = params.d, params.alpha
    if not (a < beta < d):
        raise ParameterError(f"lambda_of_beta: beta must lie in ({a}, {d}), got {beta}")
    lg = (
        log_gamma(beta / 2.0)
        + log_gamma((d - beta + a) / 2.0)
        - log_gamma((beta - a) / 2.0)
        - log_gamma((d - beta) / 2.0)
    )
    return math.exp(a * math.log(2.0) + lg)


def solve_beta(params: ProblemParams, tol: float = 1e-13) -> float:
    """Root of lambda_of_beta(beta) = delta c_alpha^{-2} on [(d+a)/2, d).

    delta = 0 returns d (the free weight exponent); delta = 1 returns the
    symmetric point (d+a)/2 where lambda attains the sharp Hardy constant.
    """
    d, a, delta = params.d, params.alpha, params.delta
    lo = 0.5 * (d + a)
    if delta == 0.0:
        return float(d)
    if delta == 1.0:
        return lo
    target = delta * hardy_sharp(a, d)
    span = d - lo
    probe = lo + span * (1.0 - np.logspace(-12, 0, 120)[::-1])
    probe = np.unique(np.clip(probe, lo, d - 1e-12 * span))
    vals = np.array([lambda_of_beta(b, params) if b > lo else hardy_sharp(a, d) for b in probe])
    if np.any(np.diff(vals) >= 0):
        raise BracketError("lambda_of_beta is not strictly decreasing on the root bracket")
    hi = d - 1e-15 * span
    f = lambda b: lambda_of_beta(b, params) - target
    if f(hi) > 0:
        raise BracketError(f"no sign change on [{lo}, {d}) for delta={delta}")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def potential(x, params: ProblemParams):
    """V_eps(x) = delta c_a^{-2} (|x|^2 + eps)^{-a/2}; x is a point or an array of points."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1) if x.ndim >= 1 else x * x
    return potential_radial(np.sqrt(r2), params)


def potential_radial(r, params: ProblemParams):
    r = np.asarray(r, dtype=float)
    q = r * r + params.eps
    if params.eps == 0.0 and np.any(r == 0):
        raise ZeroDivisionError("potential is singular at x = 0 when eps = 0")
    coupling = params.delta * hardy_sharp(params.alpha, params.d)
    out = coupling * q ** (-0.5 * params.alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DerivedConstants:
    params: ProblemParams
    c_alpha: float
    hardy_sharp: float
    beta: float
    j: float
    j_prime: float
    coupling: float
    R_half: float | None
    integrability_margin: float = field(default=0.0)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        return out


def derive(params: ProblemParams) -> DerivedConstants:
    d, a = params.d, params.alpha
    ca = c_alpha(a, d)
    hs = ca ** -2
    beta = solve_beta(params)
    j = d / (d - a)
    coupling = params.delta * hs
    r_half = (2.0 * coupling) ** (1.0 / a) if coupling > 0 else None
    return DerivedConstants(
        params=params,
        c_alpha=ca,
        hardy_sharp=hs,
        beta=beta,
        j=j,
        j_prime=d / a,
        coupling=coupling,
        R_half=r_half,
        # d - (2(d - beta) + a): positive for delta < 1, zero at delta = 1
        integrability_margin=d - (2.0 * (d - beta) + a),
    )
