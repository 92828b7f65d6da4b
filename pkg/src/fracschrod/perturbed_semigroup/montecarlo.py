"""Feynman-Kac Monte Carlo for e^{-t Lambda^eps}(x, y).

The isotropic alpha-stable process is Brownian motion run with an
alpha/2-stable subordinator: X_{k+1} = X_k + sqrt(2 S_k) N(0, I), where
S_k has Laplace transform exp(-dt lambda^{alpha/2}) and is drawn by the
Chambers-Mallows-Stuck (Kanter) representation. The kernel is estimated
with a small ball, E^x[exp(int V) 1{|X_t - y| <= h}] / |B_h|, or with the
last-jump estimator, which stops the path at t - D and multiplies its weight
by the free transition density p_D(X_{t-D}, y) exp(D (V(X_{t-D}) + V(y)) / 2).
The small ball measures a ball average of the kernel; the last-jump estimate
targets the point value and has far lower variance away from the source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constants import ProblemParams, potential_radial
from ..free_kernel import profile


@dataclass(frozen=True)
class MCConfig:
    paths: int = 100_000
    dt: float = 0.01
    h: float = 0.2
    seed: int = 12345
    chunk: int = 25_000
    estimator: str = "ball"
    last: float = 0.05

    def __post_init__(self):
        if self.paths < 1 or self.h <= 0 or self.dt <= 0 or self.last <= 0:
            raise ValueError("paths, h, dt and last must be positive")
        if self.estimator not in ("ball", "last_jump"):
            raise ValueError("estimator must be 'ball' or 'last_jump'")


@dataclass
class MCResult:
    estimate: np.ndarray
    std_error: np.ndarray
    hits: np.ndarray
    unreliable: np.ndarray
    seed: int


def positive_stable(a: float, size, rng: np.random.Generator) -> np.ndarray:
    """S >= 0 with E exp(-lam S) = exp(-lam^a), 0 < a < 1."""
    U = rng.uniform(0.0, math.pi, size)
    E = rng.exponential(1.0, size)
    return (np.sin(a * U) / np.sin(U) ** (1.0 / a)) * (np.sin((1.0 - a) * U) / E) ** ((1.0 - a) / a)


def stable_increments(alpha: float, dt: float, n: int, rng: np.random.Generator, d: int = 3) -> np.ndarray:
    """n increments of the isotropic alpha-stable process over time dt."""
    a = alpha / 2.0
    S = dt ** (1.0 / a) * positive_stable(a, n, rng)
    return np.sqrt(2.0 * S)[:, None] * rng.standard_normal((n, d))


def validate_increments(alpha: float, n: int = 200_000, seed: int = 7, n_freq: int = 20, d: int = 3):
    """Empirical characteristic function of X_1 vs exp(-|xi|^alpha); returns z-scores."""
    rng = np.random.default_rng(seed)
    X = stable_increments(alpha, 1.0, n, rng, d)
    dirs = np.random.default_rng(seed + 1).normal(size=(n_freq, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    mags = np.linspace(0.1, 2.5, n_freq)
    xi = dirs * mags[:, None]
    c = np.cos(X @ xi.T)
    emp = c.mean(axis=0)
    se = c.std(axis=0, ddof=1) / math.sqrt(n)
    return (emp - np.exp(-mags**alpha)) / se


def feynman_kac_mc(x, y, t: float, mc: MCConfig, params: ProblemParams) -> MCResult:
    """Small-ball Feynman-Kac estimates at each target y (rows of ``y``)."""
    if params.eps <= 0 and params.delta > 0:
        raise ValueError("Monte Carlo needs the regularised potential (eps > 0)")
    x = np.asarray(x, dtype=float)
    ys = np.atleast_2d(np.asarray(y, dtype=float))
    d = params.d
    last_jump = mc.estimator == "last_jump"
    horizon = t - mc.last if last_jump else t
    if horizon <= 0:
        raise ValueError("last-jump window must be shorter than t")
    n_steps = max(1, int(round(horizon / mc.dt)))
    dt = horizon / n_steps
    prof = profile(d, params.alpha) if last_jump else None
    vol = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * mc.h**d
    ss = np.random.SeedSequence(mc.seed)
    n_chunks = int(math.ceil(mc.paths / mc.chunk))
    children = ss.spawn(n_chunks)
    sums = np.zeros(len(ys))
    sq = np.zeros(len(ys))
    hits = np.zeros(len(ys), dtype=int)
    weights_hit = [[] for _ in ys]

    def V(pts):
        if params.delta == 0:
            return np.zeros(len(pts))
        return potential_radial(np.linalg.norm(pts, axis=1), params)

    done = 0
    for child in children:
        m = min(mc.chunk, mc.paths - done)
        done += m
        rng = np.random.default_rng(child)
        X = np.repeat(x[None, :], m, axis=0)
        v_prev = V(X)
        logw = np.zeros(m)
        for _ in range(n_steps):
            X = X + stable_increments(params.alpha, dt, m, rng, d)
            v_new = V(X)
            logw += 0.5 * dt * (v_prev + v_new)
            v_prev = v_new
        w = np.exp(logw)
        for i, yy in enumerate(ys):
            if last_jump:
                vy = float(V(yy[None, :])[0])
                wi = w * np.exp(0.5 * mc.last * (v_prev + vy)) * prof(mc.last, np.linalg.norm(X - yy, axis=1)) * vol
                inside = wi > 0
            else:
                inside = np.sum((X - yy) ** 2, axis=1) <= mc.h**2
                wi = w[inside]
            sums[i] += wi.sum()
            sq[i] += (wi * wi).sum()
            hits[i] += inside.sum()
            weights_hit[i].append(wi)
    N = mc.paths
    mean = sums / N
    var = np.maximum(sq / N - mean**2, 0.0)
    est = mean / vol
    se = np.sqrt(var / N) / vol
    unreliable = np.zeros(len(ys), dtype=bool)
    for i in range(len(ys)):
        wi = np.sort(np.concatenate(weights_hit[i]))[::-1]
        if wi.size:
            top = max(1, int(math.ceil(0.01 * wi.size)))
            unreliable[i] = wi[:top].sum() > 0.5 * wi.sum()
    return MCResult(est, se, hits, unreliable, mc.seed)
