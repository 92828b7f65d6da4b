"""Desingularizing radial weights phi_s(x) = eta(s^{-1/alpha} |x|).

eta equals r^{beta-d} on (0, 1) and 1/2 on [2, inf). On [1, 2] it is the
quintic Hermite interpolant matching value, slope and curvature at both
ends. Where that quintic undershoots 1/2 or fails to be monotone (large
d - beta, which only happens for d >= 5) the transition switches to
eta = 1/2 + g/2 with g(u) = (1-u)^3 exp(a u + b u^2), u = r - 1, which is
positive and decreasing for every admissible exponent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import ProblemParams, solve_beta


class WeightError(ValueError):
    pass


_CHECK_U = np.linspace(0.0, 1.0, 4001)


def _quintic_coeffs(k: float) -> np.ndarray:
    # g(u) = (1-u)^3 (A + B u + C u^2) with g(0)=1, g'(0)=-2k, g''(0)=2k(k+1);
    # eta = 1/2 + g/2
    return np.array([1.0, 3.0 - 2.0 * k, (k - 2.0) * (k - 3.0)])


def _poly_g(c, u, nd):
    A, B, C = c
    w = 1.0 - u
    q = A + B * u + C * u * u
    q1 = B + 2.0 * C * u
    q2 = 2.0 * C
    if nd == 0:
        return w**3 * q
    if nd == 1:
        return -3.0 * w**2 * q + w**3 * q1
    return 6.0 * w * q - 6.0 * w**2 * q1 + w**3 * q2


def _exp_g(c, u, nd):
    a, b = c
    w = 1.0 - u
    e = np.exp(a * u + b * u * u)
    l1 = a + 2.0 * b * u
    if nd == 0:
        return w**3 * e
    if nd == 1:
        return e * (-3.0 * w**2 + w**3 * l1)
    return e * (6.0 * w - 6.0 * w**2 * l1 + w**3 * (l1 * l1 + 2.0 * b))


@dataclass(frozen=True)
class RadialWeight:
    d: int
    alpha: float
    beta: float
    s: float = 1.0
    flat: bool = False
    kind: str = field(init=False)
    coeffs: tuple = field(init=False)

    def __post_init__(self):
        if not (self.s > 0):
            raise WeightError("scale s must be positive")
        k = self.d - self.beta
        c = _quintic_coeffs(k)
        g = _poly_g(c, _CHECK_U, 0)
        g1 = _poly_g(c, _CHECK_U, 1)
        if g.min() >= -1e-14 and g1.max() <= 1e-14:
            kind, coeffs = "quintic", tuple(float(v) for v in c)
        else:
            a = 3.0 - 2.0 * k
            b = 0.5 * (3.0 + 2.0 * k - 2.0 * k * k)
            kind, coeffs = "expblend", (a, b)
            g1 = _exp_g(coeffs, _CHECK_U[:-1], 1)
            if g1.max() > 1e-14:
                raise WeightError(f"no monotone C2 transition for d - beta = {k}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def for_params(cls, params: ProblemParams, s: float = 1.0, flat: bool = False) -> "RadialWeight":
        return cls(d=params.d, alpha=params.alpha, beta=solve_beta(params), s=s, flat=flat)

    def rescaled(self, s: float) -> "RadialWeight":
        return RadialWeight(self.d, self.alpha, self.beta, s, self.flat)

    @property
    def exponent(self) -> float:
        """d - beta: eta(r) = r^{-exponent} near the origin."""
        return self.d - self.beta

    def _g(self, u, nd):
        fn = _poly_g if self.kind == "quintic" else _exp_g
        return fn(self.coeffs, u, nd)

    def eta(self, r, nd: int = 0):
        """eta or its first/second derivative (nd = 0, 1, 2) at r > 0."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise WeightError("eta is defined for r > 0 only")
        if self.flat:
            out = np.full_like(r, 0.5) if nd == 0 else np.zeros_like(r)
            return float(out) if out.ndim == 0 else out
        k = self.exponent
        out = np.zeros_like(r)
        inner = r < 1.0
        mid = (r >= 1.0) & (r < 2.0)
        ri = r[inner]
        if nd == 0:
            out[inner] = ri**-k
            out[r >= 2.0] = 0.5
            out[mid] = 0.5 + 0.5 * self._g(r[mid] - 1.0, 0)
        elif nd == 1:
            out[inner] = -k * ri ** (-k - 1.0)
            out[mid] = 0.5 * self._g(r[mid] - 1.0, 1)
        elif nd == 2:
            out[inner] = k * (k + 1.0) * ri ** (-k - 2.0)
            out[mid] = 0.5 * self._g(r[mid] - 1.0, 2)
        else:
            raise ValueError("nd must be 0, 1 or 2")
        return float(out) if out.ndim == 0 else out

    def phi_radial(self, r, s: float | None = None):
        s = self.s if s is None else s
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise WeightError("the weight is singular at x = 0")
        return self.eta(r * s ** (-1.0 / self.alpha))

    def phi(self, x, s: float | None = None):
        """phi_s at a point (last axis = coordinates) or array of points."""
        x = np.asarray(x, dtype=float)
        return self.phi_radial(np.sqrt(np.sum(x * x, axis=-1)), s)

    def tilde(self, r, s: float | None = None):
        """The pure power (s^{-1/alpha} r)^{beta - d}, no cutoff."""
        s = self.s if s is None else s
        r = np.asarray(r, dtype=float)
        if self.flat:
            return np.full_like(r, 0.5)
        return (r * s ** (-1.0 / self.alpha)) ** (-self.exponent)
