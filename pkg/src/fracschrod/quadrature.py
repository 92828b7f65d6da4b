"""Small composite Gauss-Legendre toolkit shared by the radial integrals.

Integrands here have algebraic end-point singularities (|r - y|^{-p},
y^{beta-2}, ...). Geometric grading of panel edges toward such points gives
exponential convergence with a fixed low-order rule, so no adaptivity is
needed; the error estimate is the difference between a 20- and a 13-point
rule on the same panels.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def graded_edges(a: float, b: float, left: bool = True, right: bool = True, levels: int = 40, ratio: float = 0.25, n_mid: int = 4) -> np.ndarray:
    """Panel edges on [a, b], refined geometrically toward the flagged ends."""
    if not b > a:
        raise ValueError("graded_edges needs b > a")
    length = b - a
    pieces = []
    if left and right:
        core = np.linspace(a + ratio * length, b - ratio * length, n_mid + 1)
    elif left:
        core = np.linspace(a + ratio * length, b, n_mid + 1)
    elif right:
        core = np.linspace(a, b - ratio * length, n_mid + 1)
    else:
        core = np.linspace(a, b, n_mid + 1)
    if left:
        g = a + ratio * length * ratio ** np.arange(levels, 0, -1)
        pieces.append(np.concatenate([[a], g]))
    pieces.append(core)
    if right:
        g = b - ratio * length * ratio ** np.arange(1, levels + 1)
        pieces.append(np.concatenate([g, [b]]))
    e = np.unique(np.concatenate(pieces))
    return e[(e >= a) & (e <= b)]


def panel_nodes(edges: np.ndarray, n: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Flattened (nodes, weights) of the composite n-point rule on ``edges``."""
    x, w = gauss_legendre(n)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def integrate(fn, edges: np.ndarray) -> tuple[float, float]:
    """(integral, |20-point - 13-point|) of a vectorised ``fn`` over the panels."""
    x1, w1 = panel_nodes(edges, 20)
    x2, w2 = panel_nodes(edges, 13)
    hi = float(np.dot(w1, fn(x1)))
    lo = float(np.dot(w2, fn(x2)))
    return hi, abs(hi - lo)


def sphere_rule(n_theta: int, n_phi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on S^2: Gauss-Legendre in cos(theta), trapezoid in phi.

    Returns unit vectors (m, 3) and weights summing to 4 pi; exact for
    spherical harmonics of degree < min(2 n_theta, n_phi).
    """
    n_phi = n_phi or 2 * n_theta
    mu, wmu = gauss_legendre(n_theta)
    ph = 2 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - mu * mu)
    pts = np.stack(
        [
            (st[:, None] * np.cos(ph)[None, :]).ravel(),
            (st[:, None] * np.sin(ph)[None, :]).ravel(),
            np.repeat(mu, n_phi),
        ],
        axis=1,
    )
    w = np.repeat(wmu, n_phi) * (2 * math.pi / n_phi)
    return pts, w
