"""Strang splitting on a periodic box with spectral free steps.

The free half-steps multiply by exp(-dt/2 |xi|^alpha) in Fourier space, the
potential step multiplies by exp(dt V) with V averaged over each grid cell.
The initial condition is the band-limited free kernel p_{t0}(x, .) written
directly in Fourier space, so nothing about the diagonal spike needs to be
sampled. Values at arbitrary targets come from the trigonometric interpolant.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from ..constants import ProblemParams, potential_radial
from ..free_kernel import profile
from .table import KernelTable


class PropagatorError(RuntimeError):
    pass


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FKL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PropagatorConfig:
    L: float = 8.0
    N: int = 128
    dt: float = 0.05
    t0: float | None = None
    eps_schedule: tuple = ()
    method: str = "trotter"
    tail_factor: float = 2.0
    cell_subsamples: int = 6

    def __post_init__(self):
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two >= 8")
        if not (self.L > 0 and self.dt > 0):
            raise ValueError("L and dt must be positive")
        if self.t0 is not None and self.t0 < self.dt:
            raise ValueError("t0 must be at least dt")
        if any(b >= a for a, b in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise ValueError("eps schedule must be strictly decreasing")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def start(self) -> float:
        return self.dt if self.t0 is None else self.t0

    def check_box(self, t_max: float, alpha: float):
        need = 4.0 * t_max ** (1.0 / alpha) * self.tail_factor
        if self.L < need:
            raise ValueError(f"box half-width {self.L} below the tail rule {need:.3g}")

    def with_(self, **kw) -> "PropagatorConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return PropagatorConfig(**d)


def _axes(cfg: PropagatorConfig):
    z = -cfg.L + (np.arange(cfg.N) + 0.5) * cfg.h
    xi = 2 * math.pi * sfft.fftfreq(cfg.N, d=cfg.h)
    return z, xi


def cell_averaged_potential(cfg: PropagatorConfig, params: ProblemParams) -> np.ndarray:
    """V_eps averaged over each cell; sub-sampled where V varies within a cell."""
    z, _ = _axes(cfg)
    X, Y, Z = np.meshgrid(z, z, z, indexing="ij", sparse=True)
    r = np.sqrt(X * X + Y * Y + Z * Z)
    V = potential_radial(np.maximum(r, 1e-300), params) if params.delta > 0 else np.zeros_like(r)
    if params.delta == 0:
        return np.broadcast_to(V, (cfg.N,) * 3).copy()
    V = np.array(np.broadcast_to(V, (cfg.N,) * 3))
    m = cfg.cell_subsamples
    off = ((np.arange(m) + 0.5) / m - 0.5) * cfg.h
    ox, oy, oz = np.meshgrid(off, off, off, indexing="ij")
    ox, oy, oz = ox.ravel(), oy.ravel(), oz.ravel()
    near = np.argwhere(np.broadcast_to(r, V.shape) < 4.0 * cfg.h)
    for i, j, k in near:
        rr = np.sqrt((z[i] + ox) ** 2 + (z[j] + oy) ** 2 + (z[k] + oz) ** 2)
        V[i, j, k] = np.mean(potential_radial(rr, params))
    return V


def _symbol(cfg: PropagatorConfig, alpha: float):
    _, xi = _axes(cfg)
    k2 = xi[:, None, None] ** 2 + xi[None, :, None] ** 2 + xi[None, None, :] ** 2
    return k2 ** (alpha / 2.0)


def _initial(cfg, x, t0, sym):
    z, xi = _axes(cfg)
    ph = [np.exp(1j * xi * (z[0] - xi_c)) for xi_c in x]
    U = np.exp(-t0 * sym) * ph[0][:, None, None] * ph[1][None, :, None] * ph[2][None, None, :]
    return U


def _evaluate(U, cfg, targets):
    """Trigonometric interpolant of the grid function with spectrum U at targets."""
    z, xi = _axes(cfg)
    out = np.empty(len(targets))
    for n, y in enumerate(targets):
        e = [np.exp(1j * xi * (c - z[0])) for c in y]
        out[n] = np.real(np.einsum("ijk,i,j,k->", U, e[0], e[1], e[2]))
    return out / (2 * cfg.L) ** 3


def propagate(x, t: float, cfg: PropagatorConfig, params: ProblemParams, targets, V=None, sym=None, guard: bool = True):
    """One Strang run; returns (values at targets, mass history)."""
    x = np.asarray(x, dtype=float)
    t0 = cfg.start
    if t < t0:
        raise ValueError("t must be at least t0")
    n = int(round((t - t0) / cfg.dt))
    if abs(t0 + n * cfg.dt - t) > 1e-9 * t:
        raise ValueError("(t - t0) must be a multiple of dt")
    sym = _symbol(cfg, params.alpha) if sym is None else sym
    V = cell_averaged_potential(cfg, params) if V is None else V
    workers = worker_count()
    U = _initial(cfg, x, t0, sym)
    # potential over [0, t0] to first order: the path has not left x yet
    v_x = float(potential_radial(np.linalg.norm(x), params)) if params.delta > 0 else 0.0
    U *= math.exp(t0 * v_x)
    half = np.exp(-0.5 * cfg.dt * sym)
    expV = np.exp(cfg.dt * V)
    vmax = float(V.max())
    mass0 = float(np.real(U[0, 0, 0])) / (2 * cfg.L) ** 3 * (2 * cfg.L) ** 3
    masses = [mass0]
    for step in range(n):
        U *= half
        u = sfft.ifftn(U, workers=workers)
        u *= expV
        U = sfft.fftn(u, workers=workers)
        U *= half
        m = float(np.real(U[0, 0, 0]))
        masses.append(m)
        if guard and m > mass0 * math.exp((step + 1) * cfg.dt * vmax) * (1 + 1e-6) + 1e-12:
            raise PropagatorError("mass grows faster than exp(t sup V): box leakage or instability")
    return _evaluate(U, cfg, np.atleast_2d(targets)), np.array(masses)


def image_sum(x, targets, t, cfg: PropagatorConfig, params: ProblemParams, reach: int = 3):
    """Free-kernel contribution of all periodic images.

    Images within ``reach`` boxes are summed exactly; the rest of the lattice
    is replaced by the integral of the leading tail A t r^{-d-a} outside the
    ball with the same volume as the summed block.
    """
    prof = profile(params.d, params.alpha)
    d, a = params.d, params.alpha
    x = np.asarray(x, dtype=float)
    rng = range(-reach, reach + 1)
    shifts = np.array([(i, j, k) for i in rng for j in rng for k in rng if (i, j, k) != (0, 0, 0)], dtype=float) * 2 * cfg.L
    out = []
    for y in np.atleast_2d(targets):
        r = np.linalg.norm(y[None, :] + shifts - x[None, :], axis=1)
        out.append(float(np.sum(prof(t, r))))
    side = 2 * cfg.L
    R = side * (2 * reach + 1) * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
    A = 2.0**a * math.gamma((d + a) / 2.0) * math.gamma(1 + a / 2.0) * math.sin(math.pi * a / 2.0) / math.pi ** (d / 2.0 + 1)
    far = 4 * math.pi * A * t * R ** (-a) / (a * side**3)
    return np.array(out) + far


@dataclass
class TrotterResult:
    values: np.ndarray
    error: np.ndarray
    parts: dict = field(default_factory=dict)


def evolve_trotter(x, t: float, cfg: PropagatorConfig, params: ProblemParams, targets, budget: bool = True) -> KernelTable:
    """e^{-t Lambda^eps}(x, y) at the targets with a splitting/grid/image error budget."""
    x = np.asarray(x, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if params.d != 3:
        raise NotImplementedError("the grid propagator is three-dimensional")
    if np.any(np.abs(x) >= cfg.L) or np.any(np.abs(targets) >= cfg.L):
        raise ValueError("source and targets must lie inside the box")
    if params.delta > 0 and params.eps < cfg.h**2 and np.linalg.norm(x) < cfg.h:
        raise ValueError("source inside the unresolved core of the potential")
    cfg.check_box(t, params.alpha)
    free_images = image_sum(x, targets, t, cfg, params)
    sym = _symbol(cfg, params.alpha)
    V = cell_averaged_potential(cfg, params)
    u, masses = propagate(x, t, cfg, params, targets, V, sym)
    # A far image is reached by one long jump; before it the path carries the
    # Feynman-Kac mass M(s) of the source, after it almost none. The image is
    # therefore p_t times an average of M over [0, t], which lies in [1, M(t)].
    M = masses[-1] / masses[0]
    images = 0.5 * (1.0 + M) * free_images
    u = u - images
    parts = {"images": (0.5 * abs(M - 1.0) + 0.03) * free_images}
    if budget:
        fine = cfg.with_(dt=cfg.dt / 2, t0=cfg.start)
        u_half, _ = propagate(x, t, fine, params, targets, V, sym)
        parts["splitting"] = np.abs(u_half - images - u)
        coarse = cfg.with_(N=cfg.N // 2)
        u_coarse, m_coarse = propagate(x, t, coarse, params, targets, guard=False)
        im_c = 0.5 * (1.0 + m_coarse[-1] / m_coarse[0]) * image_sum(x, targets, t, coarse, params)
        parts["grid"] = np.abs(u_coarse - im_c - u)
    err = sum(parts.values()) if budget else np.zeros_like(u)
    meta = {
        "L": cfg.L, "N": cfg.N, "dt": cfg.dt, "t0": cfg.start, "alpha": params.alpha,
        "delta": params.delta, "d": params.d, "final_mass": float(masses[-1]),
        "budget_parts": {k: v.tolist() for k, v in parts.items()},
    }
    return KernelTable(t=[t], source=x, targets=targets, values=u[None, :], method="trotter", eps=params.eps, error=err[None, :], meta=meta)
