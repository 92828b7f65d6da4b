"""Picard iteration of the Duhamel formula without a spatial grid.

For a fixed source x the unknown is the ratio F(s, z) = q_s(x, z) / p_s(x, z),
which is bounded, equals 1 at s = 0 and is smooth away from the origin. F is
tabulated on (s, |z|, cos angle(z, x)) nodes; the potential is radial, so
the problem is axially symmetric about the line through 0 and x. One Picard
step reads

    q_tau(x, y) = p_tau(x, y) + int_0^tau ds int F(s, z) p_s(x, z) V(z) p_{tau-s}(z, y) dz.

The z-integral uses a partition of unity over the three centres x, y, 0
(weights |z - c|^{-P}, normalised), each piece integrated in spherical
coordinates about its centre with a log-radial Gauss rule. Because the map
is linear in the tabulated values it is assembled once as a matrix; the
iteration itself is then a sequence of matrix-vector products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constants import ProblemParams, potential_radial
from ..free_kernel import profile
from ..quadrature import gauss_legendre, panel_nodes, sphere_rule
from .table import KernelTable


class PicardError(RuntimeError):
    def __init__(self, msg, factor=None):
        super().__init__(msg)
        self.factor = factor


@dataclass(frozen=True)
class DuhamelConfig:
    n_tau: int = 6
    n_rho: int = 20
    n_mu: int = 7
    rho_min: float = 1e-3
    rho_max: float = 40.0
    n_sigma: int = 4
    per_decade: int = 2
    n_radial: int = 4
    s_lo: float = 1e-5
    s_hi: float = 1e3
    n_theta: int = 6
    n_phi: int = 12
    power: float = 4.0
    tol: float = 1e-5

    def refined(self) -> "DuhamelConfig":
        return DuhamelConfig(
            n_tau=self.n_tau + 2, n_rho=self.n_rho + 8, n_mu=self.n_mu + 2,
            rho_min=self.rho_min, rho_max=self.rho_max, n_sigma=self.n_sigma + 2,
            per_decade=self.per_decade + 1, n_radial=self.n_radial, s_lo=self.s_lo,
            s_hi=self.s_hi, n_theta=self.n_theta + 2, n_phi=self.n_phi + 4,
            power=self.power, tol=self.tol,
        )


def _barycentric(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Lagrange interpolation weights (len(x), len(nodes)) in barycentric form."""
    n = len(nodes)
    w = np.array([1.0 / np.prod(nodes[j] - np.delete(nodes, j)) for j in range(n)])
    diff = x[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15 * (1 + np.abs(nodes).max()))
    diff[exact] = 1.0
    terms = w[None, :] / diff
    out = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        out[rows] = exact[rows].astype(float)
    return out


def _cubic_log_weights(grid_log: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dense (len(v), len(grid)) local 4-point Lagrange weights in log-radius, clamped."""
    n = len(grid_log)
    out = np.zeros((len(v), n))
    lo, hi = grid_log[0], grid_log[-1]
    vc = np.clip(v, lo, hi)
    h = grid_log[1] - grid_log[0]
    j = np.clip(np.floor((vc - lo) / h).astype(int) - 1, 0, n - 4)
    idx = j[:, None] + np.arange(4)[None, :]
    xs = grid_log[idx]
    for a in range(4):
        num = np.ones(len(v))
        for b in range(4):
            if b != a:
                num *= (vc - xs[:, b]) / (xs[:, a] - xs[:, b])
        out[np.arange(len(v)), idx[:, a]] += num
    return out


def _frame(x: np.ndarray) -> np.ndarray:
    e1 = x / np.linalg.norm(x)
    trial = np.array([0.0, 0.0, 1.0]) if abs(e1[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e2 = trial - np.dot(trial, e1) * e1
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(e1, e2)
    return np.stack([e1, e2, e3])


class DuhamelSolver:
    """Assembles the linear Duhamel map for one source x and final time t."""

    def __init__(self, x, t: float, params: ProblemParams, cfg: DuhamelConfig | None = None):
        if params.d != 3:
            raise NotImplementedError("the Duhamel solver is three-dimensional")
        self.params = params
        self.cfg = cfg = cfg or DuhamelConfig()
        x = np.asarray(x, dtype=float)
        self.R = _frame(x)
        self.rx = float(np.linalg.norm(x))
        if self.rx == 0:
            raise ValueError("source must differ from the origin")
        self.xf = np.array([self.rx, 0.0, 0.0])
        self.t = float(t)
        self.prof = profile(params.d, params.alpha)
        k = np.arange(1, cfg.n_tau + 1)
        self.tau = 0.5 * self.t * (1 - np.cos(math.pi * k / cfg.n_tau))
        self.tau_nodes = np.concatenate([[0.0], self.tau])
        self.log_rho = np.linspace(math.log(cfg.rho_min), math.log(cfg.rho_max * self.t ** (1 / params.alpha)), cfg.n_rho)
        self.mu = np.cos(math.pi * np.arange(cfg.n_mu) / (cfg.n_mu - 1))
        self._rule()

    def _rule(self):
        c = self.cfg
        scale = self.t ** (1.0 / self.params.alpha)
        lo, hi = math.log(c.s_lo * scale), math.log(c.s_hi * scale)
        n_pan = int(math.ceil((hi - lo) / math.log(10.0) * c.per_decade))
        u, wu = panel_nodes(np.linspace(lo, hi, n_pan + 1), c.n_radial)
        s = np.exp(u)
        ws = wu * s**3  # ds = s du, volume s^2 ds
        om, wo = sphere_rule(c.n_theta, c.n_phi)
        self.offsets = (s[:, None, None] * om[None, :, :]).reshape(-1, 3)
        self.offset_w = (ws[:, None] * wo[None, :]).ravel()
        xg, wg = gauss_legendre(c.n_sigma)
        self.sig_frac = np.concatenate([0.25 * (xg + 1), 0.5 + 0.25 * (xg + 1)])
        self.sig_w = np.concatenate([0.25 * wg, 0.25 * wg])

    def table_points(self) -> np.ndarray:
        rho = np.exp(self.log_rho)
        mu = self.mu
        pts = np.stack(
            np.broadcast_arrays(rho[:, None] * mu[None, :], rho[:, None] * np.sqrt(1 - mu * mu)[None, :], 0.0 * rho[:, None] * mu[None, :]),
            axis=-1,
        )
        return pts.reshape(-1, 3)

    def _row(self, tau: float, y: np.ndarray):
        """(b, K) with int ... = b + K . T for the table T[i>=1, j, k] flattened."""
        p = self.params
        xf = self.xf
        centres = [xf, np.zeros(3)]
        if min(np.linalg.norm(y - xf), np.linalg.norm(y)) > 1e-12:
            centres.append(y)
        Z = np.concatenate([c + self.offsets for c in centres])
        W = np.tile(self.offset_w, len(centres))
        own = np.repeat(np.arange(len(centres)), len(self.offsets))
        D = np.stack([np.linalg.norm(Z - c, axis=1) for c in centres], axis=1)
        with np.errstate(divide="ignore"):
            ratio = (D[np.arange(len(Z)), own][:, None] / D) ** self.cfg.power
        omega = 1.0 / ratio.sum(axis=1)
        rz = D[:, 1]
        dx = D[:, 0]
        dy = np.linalg.norm(Z - y, axis=1)
        V = potential_radial(np.maximum(rz, 1e-300), p)
        base = W * omega * V
        Wr = _cubic_log_weights(self.log_rho, np.log(np.maximum(rz, 1e-300)))
        Wm = _barycentric(self.mu, np.clip(Z[:, 0] / np.maximum(rz, 1e-300), -1, 1))
        sig = tau * self.sig_frac
        Wt = _barycentric(self.tau_nodes, sig)
        n_t, n_r, n_m = self.cfg.n_tau, self.cfg.n_rho, self.cfg.n_mu
        K = np.zeros((n_t, n_r, n_m))
        b = 0.0
        for m, s in enumerate(sig):
            g = base * self.prof(s, dx) * self.prof(tau - s, dy) * (tau * self.sig_w[m])
            A = (g[:, None] * Wr).T @ Wm
            b += Wt[m, 0] * g.sum()
            K += Wt[m, 1:, None, None] * A[None, :, :]
        return b, K.ravel()

    def assemble(self, targets_frame: np.ndarray):
        pts = self.table_points()
        rows_b, rows_K, p_rows = [], [], []
        for tau in self.tau:
            for y in pts:
                b, K = self._row(tau, y)
                rows_b.append(b)
                rows_K.append(K)
                p_rows.append(float(self.prof(tau, np.linalg.norm(y - self.xf))))
        tb, tK, tp = [], [], []
        for y in targets_frame:
            b, K = self._row(self.t, y)
            tb.append(b)
            tK.append(K)
            tp.append(float(self.prof(self.t, np.linalg.norm(y - self.xf))))
        return (np.array(rows_b), np.array(rows_K), np.array(p_rows)), (np.array(tb), np.array(tK), np.array(tp))

    def solve(self, targets, k_max: int = 40):
        """Picard iterates at the targets; returns (values, history, factor, table)."""
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        tf = targets @ self.R.T
        (b, K, p), (tb, tK, tp) = self.assemble(tf)
        T = np.ones(len(b))
        history = [tp.copy()]
        incs = []
        factor = None
        for k in range(k_max):
            T_new = 1.0 + (b + K @ T) / p
            q_t = tp + tb + tK @ T
            history.append(q_t)
            inc = np.max(np.abs(q_t - history[-2]) / history[-2])
            incs.append(inc)
            T = T_new
            if len(incs) >= 2 and incs[-2] > 0:
                factor = incs[-1] / incs[-2]
            if inc < self.cfg.tol:
                break
        else:
            raise PicardError(f"Picard iteration did not reach tol {self.cfg.tol} in {k_max} steps", factor)
        self.table = T.reshape(self.cfg.n_tau, self.cfg.n_rho, self.cfg.n_mu)
        return history[-1], np.array(history), factor, incs


def duhamel_picard(x, y, t: float, params: ProblemParams, k_max: int = 40, cfg: DuhamelConfig | None = None, budget: bool = True) -> KernelTable:
    """q_t(x, y) for each target y with a discretisation + truncation error estimate."""
    targets = np.atleast_2d(np.asarray(y, dtype=float))
    x = np.asarray(x, dtype=float)
    if params.delta == 0:
        vals = np.array([float(profile(params.d, params.alpha)(t, np.linalg.norm(yy - x))) for yy in targets])
        return KernelTable([t], x, targets, vals[None, :], "duhamel", params.eps, np.zeros((1, len(vals))), {"iterations": 1})
    cfg = cfg or DuhamelConfig()
    solver = DuhamelSolver(x, t, params, cfg)
    vals, hist, factor, incs = solver.solve(targets, k_max)
    last = np.abs(hist[-1] - hist[-2])
    f = factor if factor is not None and factor < 1 else 0.5
    err = last * f / (1 - f)
    parts = {"picard": err.tolist()}
    if budget:
        fine = DuhamelSolver(x, t, params, cfg.refined())
        v2, _, _, _ = fine.solve(targets, k_max)
        parts["discretisation"] = np.abs(v2 - vals).tolist()
        err = err + np.abs(v2 - vals)
    meta = {"iterations": len(hist) - 1, "contraction": factor, "increments": incs, "budget_parts": parts}
    return KernelTable([t], x, targets, vals[None, :], "duhamel", params.eps, err[None, :], meta)
