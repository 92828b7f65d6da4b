"""Spectral solver in log-radius for radial potentials.

Write x = r w and expand in spherical harmonics of degree l. In the variable
s = ln r, and after factoring out r^{(alpha-d)/2}, the free operator restricted
to degree l acts as r^{-alpha} times a Fourier multiplier m_l(tau) in s
(Mellin diagonalisation of homogeneous operators). The Hardy potential is
r^{-alpha} c q_eps(s) with q_eps = (r^2/(r^2+eps))^{alpha/2}, so each sector
is the generalized symmetric eigenproblem

    (T_l - c q_eps) g = E e^{alpha s} g,

discretised with a cosine (DCT-II) basis on a long s-interval with even
reflection at both ends. One decomposition per sector gives the kernel at
every t. The free kernel is treated by the same discretisation and the
difference D = K^Lambda - K^free is added to the exact free kernel, which
removes both the diagonal spike and most of the truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import special as sp
from scipy.interpolate import make_interp_spline

from ..constants import ProblemParams, hardy_sharp
from ..free_kernel import profile


def multiplier(l: int, tau: np.ndarray, d: int, alpha: float) -> np.ndarray:
    """m_l(tau) = 2^a |Gamma((d+a+2l)/4 + i tau/2)|^2 / |Gamma((d-a+2l)/4 + i tau/2)|^2."""
    z1 = (d + alpha + 2 * l) / 4.0 + 0.5j * tau
    z2 = (d - alpha + 2 * l) / 4.0 + 0.5j * tau
    lg = 2.0 * (sp.loggamma(z1).real - sp.loggamma(z2).real)
    return np.exp(alpha * math.log(2.0) + lg)


def addition_factor(l: int, cos_theta, d: int):
    """sum_m Y_lm(x) Y_lm(y)* as a function of the angle between x and y."""
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    if d == 3:
        return (2 * l + 1) / (4 * math.pi) * sp.eval_legendre(l, cos_theta)
    lam = (d - 2) / 2.0
    return (2 * l + d - 2) / ((d - 2) * area) * sp.eval_gegenbauer(l, lam, cos_theta)


@dataclass
class Sector:
    l: int
    s0: float
    ds: float
    E: np.ndarray
    G: np.ndarray  # eigenfunctions g_n at the collocation points, W-orthonormal / sqrt(ds)

    @property
    def n(self) -> int:
        return self.G.shape[0]

    def interpolate(self, s: np.ndarray) -> np.ndarray:
        """Eigenfunctions at arbitrary s by a quintic spline through the collocation values.

        A global cosine series is not used here: G carries the factor
        e^{-alpha s/2} and has kinks at the reflected ends, so its cosine
        series converges slowly and leaves an error floor everywhere.
        """
        s = np.asarray(s, dtype=float)
        nodes = self.s0 + (np.arange(self.n) + 0.5) * self.ds
        spl = make_interp_spline(nodes, self.G, k=5, axis=0)
        out = spl(np.clip(s, nodes[0], nodes[-1]))
        # below the truncated inner edge the sector is negligible by construction
        out[s < self.s0] = 0.0
        return out


@dataclass
class SectorConfig:
    n: int = 800
    s_min: float = -12.0
    s_max: float = 14.0
    l_max: int = 400
    tol: float = 1e-6
    l_patience: int = 4

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / self.n


class SectorSolver:
    """Kernel of e^{-t((-Delta)^{a/2} - V_eps)} for radial V via angular sectors."""

    def __init__(self, params: ProblemParams, cfg: SectorConfig | None = None):
        self.params = params
        self.cfg = cfg or SectorConfig()
        self.coupling = params.delta * hardy_sharp(params.alpha, params.d)
        self.stats: dict = {}

    def _grid(self, l: int):
        c = self.cfg
        s_lo = c.s_min if l < 4 else max(c.s_min, math.log(l / 20.0) - 2.0)
        s_lo = c.s_min + c.ds * round((s_lo - c.s_min) / c.ds)
        n = int(round((c.s_max - s_lo) / c.ds))
        s = s_lo + (np.arange(n) + 0.5) * c.ds
        return s_lo, n, s

    def sector(self, l: int, coupling: float | None = None) -> Sector:
        p = self.params
        c = self.coupling if coupling is None else coupling
        s_lo, n, s = self._grid(l)
        ds = self.cfg.ds
        C = sfft.dct(np.eye(n), type=2, norm="ortho", axis=0)
        tau = math.pi * np.arange(n) / (n * ds)
        T = C.T @ (multiplier(l, tau, p.d, p.alpha)[:, None] * C)
        if c != 0.0:
            r2 = np.exp(2 * s)
            q = (r2 / (r2 + p.eps)) ** (p.alpha / 2.0) if p.eps > 0 else np.ones(n)
            T[np.diag_indices(n)] -= c * q
        wh = np.exp(-0.5 * p.alpha * s)
        M = wh[:, None] * T * wh[None, :]
        M = 0.5 * (M + M.T)
        E, V = np.linalg.eigh(M)
        self.stats.setdefault("min_eig", {})[l] = float(E[0])
        return Sector(l, s_lo, ds, np.clip(E, 0.0, None), wh[:, None] * V / math.sqrt(ds))

    def _radial_factor(self, r):
        p = self.params
        return r ** ((p.alpha - p.d) / 2.0)

    def kernel_pairs(self, times, x, y, subtract_free: bool = True):
        """e^{-t Lambda}(x_i, y_i) for each t; returns (values[t, i], truncation_estimate[t, i]).

        x, y: arrays of shape (m, d). With subtract_free the sector sum is
        applied to the difference from the free kernel, which is then added
        back exactly.
        """
        p, cfg = self.params, self.cfg
        times = np.atleast_1d(np.asarray(times, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        rx = np.linalg.norm(x, axis=1)
        ry = np.linalg.norm(y, axis=1)
        if np.any(rx == 0) or np.any(ry == 0):
            raise ValueError("sector kernel is evaluated away from the origin")
        cos_t = np.clip(np.sum(x * y, axis=1) / (rx * ry), -1.0, 1.0)
        radii, inv = np.unique(np.concatenate([rx, ry]), return_inverse=True)
        ix, iy = inv[: len(rx)], inv[len(rx) :]
        s_req = np.log(radii)
        if s_req.min() < cfg.s_min + 2 or s_req.max() > cfg.s_max - 6:
            raise ValueError("requested radii too close to the ends of the log-radius domain")
        pref = self._radial_factor(rx) * self._radial_factor(ry)
        total = np.zeros((len(times), len(rx)))
        last = np.zeros_like(total)
        quiet = 0
        used = 0
        for l in range(cfg.l_max + 1):
            ang = addition_factor(l, cos_t, p.d)
            term = self._sector_pairs(l, self.coupling, s_req, ix, iy, times)
            if subtract_free:
                term = term - self._sector_pairs(l, 0.0, s_req, ix, iy, times)
            contrib = pref[None, :] * ang[None, :] * term
            total += contrib
            used = l
            scale = np.abs(total) + 1e-300
            small = np.all(np.abs(contrib) <= cfg.tol * scale) if not subtract_free else np.all(
                np.abs(contrib) <= cfg.tol * (scale + self._free_scale(times, rx, ry))
            )
            quiet = quiet + 1 if small else 0
            last = np.maximum(np.abs(contrib), last * 0.5)
            if quiet >= cfg.l_patience:
                break
        self.stats["l_used"] = used
        if subtract_free:
            prof = profile(p.d, p.alpha)
            dist = np.linalg.norm(x - y, axis=1)
            total = total + np.array([prof(t, dist) for t in times])
        return total, last * cfg.l_patience

    def _free_scale(self, times, rx, ry):
        prof = profile(self.params.d, self.params.alpha)
        return np.array([prof(t, np.abs(rx - ry)) for t in times])

    def _sector_pairs(self, l, coupling, s_req, ix, iy, times):
        sec = self.sector(l, coupling)
        G = sec.interpolate(s_req)
        out = np.empty((len(times), len(ix)))
        prod = G[ix] * G[iy]
        for k, t in enumerate(times):
            out[k] = prod @ np.exp(-t * sec.E)
        return out


class RadialSemigroup:
    """e^{-t Lambda} on radial functions: only the l = 0 sector contributes.

    Functions are represented by their values on the sector's collocation
    points r_j = exp(s_j). For radial f,

        (e^{-t Lambda} f)(r) = r^{(a-d)/2} sum_n e^{-t E_n} g_n(ln r) c_n,
        c_n = int rho^{(a-d)/2} g_n(ln rho) f(rho) rho^{d-1} d rho,

    the angular integral cancelling the l = 0 addition factor.
    """

    def __init__(self, params: ProblemParams, cfg: SectorConfig | None = None):
        self.params = params
        # the l = 0 sector is cheap, so it gets twice the default resolution
        self.solver = SectorSolver(params, cfg or SectorConfig(n=1600))
        self.sec = self.solver.sector(0)
        c = self.solver.cfg
        n = self.sec.n
        self.s = self.sec.s0 + (np.arange(n) + 0.5) * self.sec.ds
        self.r = np.exp(self.s)
        d, a = params.d, params.alpha
        self._in = self.sec.ds * np.exp(0.5 * (a + d) * self.s)
        self._out = np.exp(0.5 * (a - d) * self.s)
        self.area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        self.cfg = c

    def apply(self, f_vals: np.ndarray, times) -> np.ndarray:
        """(e^{-t Lambda} f)(r_j) for each t; f given at the collocation radii."""
        G = self.sec.G
        coef = G.T @ (self._in * f_vals)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.stack([self._out * (G @ (np.exp(-t * self.sec.E) * coef)) for t in times])

    def integrate(self, vals: np.ndarray, lo: float = 0.0, hi: float = math.inf) -> np.ndarray:
        """int_{lo <= |x| <= hi} v(|x|) dx by the midpoint rule in ln r (last axis)."""
        mask = (self.r >= lo) & (self.r <= hi)
        w = self.area * self.sec.ds * self.r**self.params.d * mask
        return vals @ w

    def shell_cumulative(self, vals: np.ndarray) -> np.ndarray:
        """int_{|x| <= r_j} v dx at every collocation radius (last axis)."""
        w = self.area * self.sec.ds * self.r**self.params.d
        return np.cumsum(vals * w, axis=-1)
