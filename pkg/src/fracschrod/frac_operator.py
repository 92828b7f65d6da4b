"""(-Delta)^{alpha/2} and Riesz potentials of radial functions in three dimensions.

For radial f in R^3 write u(y) = y f(y) and extend u oddly to the line. Then

    (-Delta)^{a/2} f (r) = r^{-1} (-d^2/dy^2)^{a/2} U (r),

and the one-dimensional hypersingular integral folds onto the half line:

    C_{1,a} / r * [ p.v. int_0^inf (u(r) - u(y)) |r - y|^{-1-a} dy
                    + int_0^inf (u(r) + u(y)) (r + y)^{-1-a} dy ].

The principal value is written as a symmetric second difference in h = |r - y|,
the piece h < h0 is replaced by its Taylor expansion, and the far field
y > 2r is integrated in log y with the constant part done analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import ParameterError, ProblemParams, lambda_of_beta, potential_radial
from .quadrature import graded_edges, integrate
from .specfun import gamma
from .weights import RadialWeight


class OperatorError(RuntimeError):
    pass


class DivergenceError(OperatorError):
    pass


@dataclass(frozen=True)
class RadialFunction:
    """A radial profile with the asymptotic data the quadratures need.

    ``decay``: f(r) ~ r^{-decay} as r -> inf (``math.inf`` for compact support).
    ``singularity``: f(r) ~ r^{-singularity} as r -> 0.
    ``breaks``: radii where f is only C^2 (panel edges are placed there).
    """

    profile: Callable
    smoothness: str = "C2"
    decay: float = 0.0
    singularity: float = 0.0
    breaks: tuple = field(default_factory=tuple)

    def __call__(self, r):
        return self.profile(np.asarray(r, dtype=float))

    def check_exponents(self, tol: float = 0.05) -> None:
        """Compare declared exponents with sampled log-log slopes."""
        if math.isfinite(self.decay):
            r1, r2 = 1e5, 2e5
            f1, f2 = abs(float(self(r1))), abs(float(self(r2)))
            if self.decay == 0.0:
                ok = f1 > 0 and abs(f2 / f1 - 1.0) <= tol
            else:
                slope = -math.log(f2 / f1) / math.log(r2 / r1)
                ok = abs(slope - self.decay) <= tol * abs(self.decay)
            if not ok:
                raise ValueError("declared decay exponent does not match the profile")
        r1, r2 = 1e-7, 2e-7
        f1, f2 = abs(float(self(r1))), abs(float(self(r2)))
        if self.singularity == 0.0:
            ok = f1 == f2 == 0.0 or (f1 > 0 and abs(f2 / f1 - 1.0) <= tol)
        else:
            slope = -math.log(f2 / f1) / math.log(r2 / r1)
            ok = abs(slope - self.singularity) <= tol * abs(self.singularity)
        if not ok:
            raise ValueError("declared singularity exponent does not match the profile")

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        return combine(1.0, self, 1.0, other)


def combine(a: float, f: RadialFunction, b: float, g: RadialFunction) -> RadialFunction:
    return RadialFunction(
        lambda r: a * f.profile(r) + b * g.profile(r),
        smoothness=f.smoothness,
        decay=min(f.decay, g.decay),
        singularity=max(f.singularity, g.singularity),
        breaks=tuple(sorted(set(f.breaks) | set(g.breaks))),
    )


def power(p: float) -> RadialFunction:
    """r^{-p}."""
    return RadialFunction(lambda r: r ** (-p), "analytic", decay=p, singularity=p)


def hypersingular_constant(d: int, alpha: float) -> float:
    """C_{d,a} = 2^a Gamma((d+a)/2) / (pi^{d/2} |Gamma(-a/2)|)."""
    return 2.0**alpha * gamma((d + alpha) / 2.0) / (math.pi ** (d / 2.0) * abs(gamma(-alpha / 2.0)))


def _require_d3(d: int):
    if d != 3:
        raise NotImplementedError("radial fractional operators are implemented for d = 3")


def _kernel_gap(y, r, alpha):
    # (y + r)^{-1-a} - (y - r)^{-1-a} for y >= 2r without cancellation
    x = r / y
    p = 1.0 + alpha
    lo = -p * np.log1p(-x)
    hi = -p * np.log1p(x)
    return y ** (-p) * np.exp(lo) * np.expm1(hi - lo)


def _breaks_in(f: RadialFunction, a: float, b: float):
    return [c for c in f.breaks if a < c < b]


def _edges_with_breaks(a, b, breaks, left, right):
    pts = [a, *breaks, b]
    parts = []
    for i in range(len(pts) - 1):
        lo, hi = pts[i], pts[i + 1]
        parts.append(graded_edges(lo, hi, left=left or i > 0, right=right or i < len(pts) - 2, levels=30))
    return np.unique(np.concatenate(parts))


def frac_laplacian_radial(f: RadialFunction, r: float, alpha: float, tol: float = 1e-9) -> float:
    """(-Delta)^{a/2} f at radius r > 0 (d = 3)."""
    if not (r > 0):
        raise ValueError("frac_laplacian_radial needs r > 0")
    if not (0 < alpha < 2):
        raise ParameterError("alpha must lie in (0, 2)")
    if f.decay + alpha <= 0 or f.singularity >= 3:
        raise DivergenceError("input is not integrable against the hypersingular kernel")

    def u(y):
        y = np.asarray(y, dtype=float)
        return y * f.profile(y)

    ur = float(u(r))
    p = 1.0 + alpha

    # Taylor zone h < h0: 2u(r) - u(r-h) - u(r+h) = -u''h^2 - u''''h^4/12 + ...
    h0 = 0.02 * r
    for c in f.breaks:
        if abs(c - r) > 0:
            h0 = min(h0, 0.25 * abs(c - r))
    hs = 0.5 * h0
    u_pm = [float(u(r + k * hs)) for k in (-2, -1, 1, 2)]
    u2 = (-u_pm[0] + 16 * u_pm[1] - 30 * ur + 16 * u_pm[2] - u_pm[3]) / (12 * hs * hs)
    u4 = (u_pm[0] - 4 * u_pm[1] + 6 * ur - 4 * u_pm[2] + u_pm[3]) / hs**4
    near = -u2 * h0 ** (2 - alpha) / (2 - alpha) - u4 * h0 ** (4 - alpha) / (12 * (4 - alpha))

    # second difference on [h0, r/2] in h, then on y = r - h in [0, r/2] so
    # that grading toward the origin keeps full relative precision
    hb = sorted({abs(r - c) for c in f.breaks if h0 < abs(r - c) < 0.5 * r})
    edges = _edges_with_breaks(h0, 0.5 * r, hb, left=False, right=False)
    sec, e1 = integrate(lambda h: (2 * ur - u(r - h) - u(r + h)) * h ** (-p), edges)
    edges = _edges_with_breaks(0.0, 0.5 * r, _breaks_in(f, 0.0, 0.5 * r), left=True, right=False)
    v, e = integrate(lambda y: (2 * ur - u(y) - u(2 * r - y)) * (r - y) ** (-p), edges)
    sec, e1 = sec + v, e1 + e

    # reflected part on [0, 2r]
    edges = _edges_with_breaks(0.0, 2 * r, _breaks_in(f, 0.0, 2 * r), left=True, right=False)
    refl, e2 = integrate(lambda y: (ur + u(y)) * (r + y) ** (-p), edges)

    # far field y > 2r: constant part exactly, the rest in log y
    const = ur * (r ** (-alpha) + (3 * r) ** (-alpha)) / alpha
    far, e3 = _far_field(u, r, alpha, f)

    total = sec + refl + const + far + near
    err = e1 + e2 + e3
    scale = abs(sec) + abs(refl) + abs(const) + abs(far) + abs(near)
    if not math.isfinite(total) or err > tol * scale + 1e-300:
        raise OperatorError(f"hypersingular quadrature error {err:.2e} at r={r}")
    c1 = 2.0**alpha * gamma((1 + alpha) / 2.0) / (math.sqrt(math.pi) * abs(gamma(-alpha / 2.0)))
    return c1 * total / r


def _far_field(u, r, alpha, f):
    # int_{2r}^inf u(y) [(y+r)^{-1-a} - (y-r)^{-1-a}] dy; the bracket ~ y^{-2-a}
    s_max = 60.0 if math.isfinite(f.decay) else 50.0
    lo = math.log(2 * r)
    logb = sorted(math.log(c) for c in f.breaks if c > 2 * r)
    pts = [lo, *logb, lo + s_max]
    parts = [graded_edges(a, b, left=i > 0, right=i < len(pts) - 2, levels=20, n_mid=max(4, int(4 * (b - a)))) for i, (a, b) in enumerate(zip(pts[:-1], pts[1:]))]
    edges = np.unique(np.concatenate(parts))

    def g(s):
        y = np.exp(s)
        return u(y) * _kernel_gap(y, r, alpha) * y

    val, err = integrate(g, edges)
    # tail beyond Y: u ~ A y^{1-q}, bracket ~ -2(1+a) r y^{-2-a}
    Y = math.exp(pts[-1])
    if math.isfinite(f.decay):
        q = f.decay
        A = float(u(Y)) * Y ** (q - 1.0)
        val += -2 * (1 + alpha) * r * A * Y ** (-q - alpha) / (q + alpha)
    return val, err


def frac_laplacian(f: RadialFunction, x, alpha: float, d: int = 3) -> float:
    """(-Delta)^{a/2} f at the point x (any shape-(d,) array or a radius)."""
    _require_d3(d)
    x = np.asarray(x, dtype=float)
    r = float(np.sqrt(np.sum(x * x))) if x.ndim else float(abs(x))
    return frac_laplacian_radial(f, r, alpha)


def riesz_constant(nu: float, d: int = 3) -> float:
    """k_nu with I_nu g = k_nu |.|^{nu-d} * g."""
    return gamma((d - nu) / 2.0) / (2.0**nu * math.pi ** (d / 2.0) * gamma(nu / 2.0))


def _shell_average(r, rho, nu, gap=None):
    # int_{S^2} |x - rho w|^{nu-3} dw for |x| = r; gap = |r - rho| if known exactly
    gap = np.abs(r - rho) if gap is None else gap
    if abs(nu - 1.0) < 1e-12:
        return 2 * math.pi / (r * rho) * np.log((r + rho) / gap)
    return 2 * math.pi / (r * rho * (nu - 1.0)) * ((r + rho) ** (nu - 1.0) - gap ** (nu - 1.0))


def riesz_potential(g: RadialFunction, nu: float, x, d: int = 3, tol: float = 1e-9) -> float:
    """(I_nu g)(x) = k_nu int |x - y|^{nu - d} g(y) dy for radial g (d = 3)."""
    _require_d3(d)
    if not (0 < nu < d):
        raise ParameterError(f"riesz_potential needs 0 < nu < d, got {nu}")
    if g.decay <= nu:
        raise DivergenceError(f"decay r^-{g.decay} too slow for I_{nu}")
    if g.singularity >= d:
        raise DivergenceError("input not locally integrable at the origin")
    x = np.asarray(x, dtype=float)
    r = float(np.sqrt(np.sum(x * x))) if x.ndim else float(abs(x))
    if not r > 0:
        raise ValueError("riesz_potential is evaluated at x != 0")

    def integrand(rho, gap=None):
        return g.profile(rho) * rho * rho * _shell_average(r, rho, nu, gap)

    total, err = 0.0, 0.0
    edges = _edges_with_breaks(0.0, 0.5 * r, _breaks_in(g, 0.0, 0.5 * r), left=True, right=False)
    v, e = integrate(integrand, edges)
    total, err = total + v, err + e
    # rho = r -+ h with h graded toward the diagonal
    for sign, hi in ((-1.0, 0.5 * r), (1.0, r)):
        hb = sorted(abs(c - r) for c in g.breaks if 0 < sign * (c - r) < hi)
        edges = _edges_with_breaks(0.0, hi, hb, left=True, right=False)
        v, e = integrate(lambda h: integrand(r + sign * h, h), edges)
        total, err = total + v, err + e
    lo = math.log(2 * r)
    logb = sorted(math.log(c) for c in g.breaks if c > 2 * r)
    width = 60.0 if math.isfinite(g.decay) else 50.0
    pts = [lo, *logb, lo + width]
    parts = [graded_edges(a, b, left=i > 0, right=i < len(pts) - 2, levels=20, n_mid=max(4, int(4 * (b - a)))) for i, (a, b) in enumerate(zip(pts[:-1], pts[1:]))]
    edges = np.unique(np.concatenate(parts))
    v, e = integrate(lambda s: integrand(np.exp(s)) * np.exp(s), edges)
    total, err = total + v, err + e
    if math.isfinite(g.decay):
        Y = math.exp(pts[-1])
        A = float(g.profile(np.asarray(Y))) * Y**g.decay
        total += 4 * math.pi * A * Y ** (nu - g.decay) / (g.decay - nu)
    if not math.isfinite(total) or err > tol * (abs(total) + 1e-300) + 1e-300:
        raise OperatorError(f"Riesz quadrature error {err:.2e} at r={r}")
    return riesz_constant(nu, d) * total


def laplacian_radial(f: Callable, df: Callable, d2f: Callable, d: int = 3) -> Callable:
    """Delta of a radial profile from its first two derivatives."""
    return lambda r: d2f(r) + (d - 1) * df(r) / r


# --- weights and the constants of the routine calculations -----------------


def weight_difference(w: RadialWeight) -> RadialFunction:
    """phi_s - tilde phi_s; vanishes on the ball of radius s^{1/alpha}."""
    rs = w.s ** (1.0 / w.alpha)

    def prof(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        m = r >= rs
        out[m] = w.phi_radial(r[m]) - w.tilde(r[m])
        return out

    return RadialFunction(prof, "C2", decay=0.0, singularity=0.0, breaks=(rs, 2 * rs))


def _laplacian_outside(w: RadialWeight) -> RadialFunction:
    # 1_{|x| > 1} Delta(phi_1 - tilde phi_1), d = 3
    k = w.exponent

    def prof(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        m = r > 1.0
        rm = r[m]
        lap_eta = w.eta(rm, 2) + 2.0 * w.eta(rm, 1) / rm
        out[m] = lap_eta - k * (k - 1.0) * rm ** (-k - 2.0)
        return out

    return RadialFunction(prof, "C0", decay=k + 2.0, singularity=0.0, breaks=(1.0, 2.0))


def log_grid(n: int, lo: float = 1e-2, hi: float = 50.0) -> np.ndarray:
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


@dataclass(frozen=True)
class ConstantReport:
    value: float
    grid_points: int
    previous: float
    argext: float
    inf_value: float
    sup_value: float


def _refine(fn, n0: int, rel: float, max_rounds: int, lo: float, hi: float, mode: str):
    prev = None
    n = n0
    for _ in range(max_rounds):
        rr = log_grid(n, lo, hi)
        vals = np.array([fn(r) for r in rr])
        ext = float(np.max(vals)) if mode == "max" else float(np.min(vals))
        if prev is not None:
            scale = max(abs(ext), abs(prev[0]), 1e-300)
            if abs(ext - prev[0]) <= rel * scale:
                return ext, n, prev[0], rr, vals
        prev = (ext,)
        n = 2 * n - 1
    raise OperatorError("grid refinement did not stabilise")


def measure_C1_report(w: RadialWeight, n0: int = 41, rel: float = 0.05, max_rounds: int = 5) -> ConstantReport:
    """Sup over |x| in [1e-2, 50] of I_{2-a}[1_{B^c} Delta(phi_1 - tilde phi_1)]."""
    if w.s != 1.0:
        raise ValueError("measure_C1 expects the s = 1 weight")
    if w.d != 3:
        raise NotImplementedError("measure_C1 is implemented for d = 3")
    g = _laplacian_outside(w)
    nu = 2.0 - w.alpha
    fn = lambda r: riesz_potential(g, nu, r)
    sup, n, prev, rr, vals = _refine(fn, n0, rel, max_rounds, 1e-2, 50.0, "max")
    i = int(np.argmax(vals))
    return ConstantReport(
        value=max(0.0, sup), grid_points=n, previous=prev, argext=float(rr[i]),
        inf_value=float(np.min(vals)), sup_value=sup,
    )


def measure_C1(w: RadialWeight) -> float:
    """C_1 >= 0 with -I_{2-a}[1_{B^c} Delta(phi_1 - tilde phi_1)] >= -C_1 on the grid."""
    return measure_C1_report(w).value


def v_eps(w: RadialWeight, params: ProblemParams, r: float) -> float:
    """(-Delta)^{a/2}phi - V_eps phi - 1_B (V - V_eps) phi at radius r (ball radius s^{1/a})."""
    rs = w.s ** (1.0 / w.alpha)
    diff = frac_laplacian_radial(weight_difference(w), r, w.alpha, tol=1e-7)
    if r < rs:
        # phi = tilde phi here and (-Delta)^{a/2} tilde phi = V tilde phi
        return diff
    lam = lambda_of_beta(w.beta, params) if params.delta > 0 else 0.0
    v_tilde = lam * r ** (-w.alpha) * float(w.tilde(r))
    return diff + v_tilde - float(potential_radial(r, params)) * float(w.phi_radial(r))


def measure_mu1_report(w: RadialWeight, eps: float, params: ProblemParams | None = None, n0: int = 41, rel: float = 0.05, max_rounds: int = 5, r_lo: float = 1e-2, r_hi: float = 50.0) -> ConstantReport:
    if params is None:
        params = ProblemParams(d=w.d, alpha=w.alpha, delta=_delta_of(w))
    params = params.with_(eps=eps)
    scale = w.s ** (1.0 / w.alpha)
    fn = lambda r: abs(v_eps(w, params, r))
    sup, n, prev, rr, vals = _refine(fn, n0, rel, max_rounds, r_lo * scale, r_hi * scale, "max")
    i = int(np.argmax(vals))
    return ConstantReport(sup, n, prev, float(rr[i]), float(np.min(vals)), sup)


def measure_mu1(w: RadialWeight, eps: float, params: ProblemParams | None = None) -> float:
    """sup |v_eps| over a log grid; the bound ||v_eps||_inf <= mu_1 / s."""
    if not (eps >= 0):
        raise ValueError("eps must be non-negative")
    return measure_mu1_report(w, eps, params).value


def _delta_of(w: RadialWeight) -> float:
    # invert beta -> delta through the multiplier identity
    from .constants import hardy_sharp

    if w.beta >= w.d:
        return 0.0
    p = ProblemParams(d=w.d, alpha=w.alpha, delta=0.5)
    return min(1.0, lambda_of_beta(w.beta, p) / hardy_sharp(w.alpha, w.d))


def eigen_residual(params: ProblemParams, radii=None) -> float:
    """max relative gap between (-Delta)^{a/2} r^{beta-d} and lambda(beta) r^{beta-d-a}."""
    from .constants import solve_beta

    beta = solve_beta(params)
    k = params.d - beta
    lam = lambda_of_beta(beta, params)
    radii = np.exp(np.linspace(math.log(0.2), math.log(5.0), 15)) if radii is None else radii
    f = power(k)
    res = [abs(frac_laplacian_radial(f, r, params.alpha) / (lam * r ** (-k - params.alpha)) - 1.0) for r in radii]
    return float(max(res))
