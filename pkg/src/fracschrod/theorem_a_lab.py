"""Finite-dimensional laboratory for the weighted Nash estimate.

A DiscreteSemigroup is a generator matrix L acting on functions on n points
with a measure mu, self-adjoint in the mu inner product <f, g> = sum mu f g,
and weight vectors phi_s. Kernels are taken with respect to mu:

    (e^{-tL} f)(x) = sum_y K_t(x, y) f(y) mu(y),  K_t = exp(-tL) diag(1/mu).

Hypotheses (M1)-(M4) and the conclusion K_t(x, y) <= C t^{-j'} phi_t(x) phi_t(y)
are measured exactly from a symmetric eigendecomposition.

The standard instance is the radial (l = 0) part of (-Delta)^{a/2} - V on
R^3: with u = sqrt(4 pi) r f the operator becomes the one-dimensional
fractional Laplacian on odd functions, discretised by the fractional centred
difference (symbol |2 sin(theta/2) / h|^a) on a uniform grid with the
process killed outside the box.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .constants import ProblemParams, hardy_sharp
from .verifier import RatioReport, _params_dict
from .weights import RadialWeight


class LabError(ValueError):
    pass


@dataclass
class DiscreteSemigroup:
    L: np.ndarray
    mu: np.ndarray
    weight: object  # callable s -> vector of phi_s values
    j: float
    name: str = "custom"
    points: np.ndarray | None = None
    inner: np.ndarray | None = None  # mask of points away from the box boundary
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        n = len(self.mu)
        if self.L.shape != (n, n):
            raise LabError("generator and measure sizes differ")
        if np.any(self.mu <= 0):
            raise LabError("measure must be positive")
        if self.j <= 1:
            raise LabError("Sobolev exponent j must exceed 1")
        sq = np.sqrt(self.mu)
        S = sq[:, None] * self.L / sq[None, :]
        asym = np.abs(S - S.T).max()
        if asym > 1e-9 * max(1.0, np.abs(S).max()):
            raise LabError(f"generator is not mu-symmetric (defect {asym:.3g})")
        S = 0.5 * (S + S.T)
        self.evals, self.Q = np.linalg.eigh(S)
        if self.evals[0] < -1e-9 * max(1.0, abs(self.evals[-1])):
            raise LabError(f"generator has negative spectrum ({self.evals[0]:.3g})")
        if self.inner is None:
            self.inner = np.ones(n, dtype=bool)

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def j_prime(self) -> float:
        return self.j / (self.j - 1.0)

    def phi(self, s: float) -> np.ndarray:
        return np.asarray(self.weight(s), dtype=float)

    def expm(self, t: float) -> np.ndarray:
        """exp(-tL) from the eigendecomposition of the symmetrised generator."""
        sq = np.sqrt(self.mu)
        E = (self.Q * np.exp(-t * np.clip(self.evals, 0.0, None))) @ self.Q.T
        return E / sq[:, None] * sq[None, :]

    def expm_direct(self, t: float) -> np.ndarray:
        """exp(-tL) by scaling and squaring, for cross-checking."""
        return sla.expm(-t * self.L)

    def kernel(self, t: float) -> np.ndarray:
        return self.expm(t) / self.mu[None, :]

    def sqrt_form(self, f: np.ndarray) -> np.ndarray:
        """||L^{1/2} f||_2^2 = <L f, f> for each column of f."""
        sq = np.sqrt(self.mu)
        g = self.Q.T @ (sq[:, None] * f)
        return np.sum(np.clip(self.evals, 0.0, None)[:, None] * g * g, axis=0)

    def norm(self, f: np.ndarray, p: float) -> np.ndarray:
        return np.sum(self.mu[:, None] * np.abs(f) ** p, axis=0) ** (1.0 / p)


# ----------------------------------------------------------------------------
# instances


def centred_difference_coeffs(alpha: float, m: int) -> np.ndarray:
    """g_k, k = 0..m-1, of the fractional centred difference: sum_k g_|k| e^{ik theta} = |2 sin(theta/2)|^alpha."""
    g = np.empty(m)
    g[0] = math.gamma(alpha + 1.0) / math.gamma(alpha / 2.0 + 1.0) ** 2
    for k in range(m - 1):
        g[k + 1] = g[k] * (k - alpha / 2.0) / (k + alpha / 2.0 + 1.0)
    return g


def radial_instance(n: int = 200, box: float = 10.0, params: ProblemParams | None = None, flat: bool = False) -> DiscreteSemigroup:
    """The l = 0 part of (-Delta)^{a/2} - delta c^{-2} |x|^{-a} in R^3 on n radial cells of [0, box]."""
    params = params or ProblemParams(d=3, alpha=1.0, delta=0.5)
    if params.d != 3:
        raise LabError("the radial instance is three-dimensional")
    a = params.alpha
    h = box / n
    r = (np.arange(n) + 0.5) * h
    g = centred_difference_coeffs(a, 2 * n + 1) * h**-a
    i = np.arange(n)
    A = g[np.abs(i[:, None] - i[None, :])] - g[i[:, None] + i[None, :] + 1]
    D = math.sqrt(4 * math.pi) * r
    L = A * D[None, :] / D[:, None]
    if params.delta > 0:
        L[np.diag_indices(n)] -= params.delta * hardy_sharp(a, 3) * r**-a
    mu = 4 * math.pi * r**2 * h
    w = RadialWeight.for_params(params, flat=flat)
    jj = 3.0 / (3.0 - a)
    meta = {"n": n, "box": box, "h": h, **_params_dict(params), "flat": flat}
    return DiscreteSemigroup(L, mu, lambda s: w.phi_radial(r, s=s), jj, "fracschrod", r, r <= box / 2, meta)


def cycle_instance(n: int = 50) -> DiscreteSemigroup:
    """Graph Laplacian of the n-cycle, uniform measure, phi = 1, j = 3/2."""
    L = 2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1, axis=1)
    return DiscreteSemigroup(L, np.ones(n), lambda s: np.ones(n), 1.5, "cycle", np.arange(n, dtype=float), None, {"n": n})


def custom_instance(spec: dict) -> DiscreteSemigroup:
    """{matrix, mu, weights: {s: vector}, j}; weights are looked up at the nearest listed s."""
    L = np.array(spec["matrix"], dtype=float)
    mu = np.array(spec["mu"], dtype=float)
    ws = {float(k): np.array(v, dtype=float) for k, v in spec.get("weights", {"1": [1.0] * len(mu)}).items()}
    keys = np.array(sorted(ws))

    def weight(s):
        return ws[float(keys[np.argmin(np.abs(np.log(keys / s)))])]

    return DiscreteSemigroup(L, mu, weight, float(spec["j"]), "custom", None, None, {"n": len(mu)})


def load_custom(path: str) -> DiscreteSemigroup:
    with open(path) as fh:
        return custom_instance(json.load(fh))


# ----------------------------------------------------------------------------
# hypotheses


def check_m1(ds: DiscreteSemigroup, trials: int = 200, seed: int = 0, polish: bool = True):
    """(holds, c_S): min of ||L^{1/2} f||^2 / ||f||_{2j}^2 over random, delta and low-mode vectors."""
    rng = np.random.default_rng(seed)
    n = ds.n
    sq = np.sqrt(ds.mu)
    modes = (ds.Q[:, : min(n, 20)] / sq[:, None])
    cands = [np.eye(n), modes, rng.standard_normal((n, trials)), np.abs(rng.standard_normal((n, trials))) * modes[:, :1]]
    F = np.concatenate(cands, axis=1)
    F = F[:, np.linalg.norm(F, axis=0) > 0]
    q = ds.sqrt_form(F) / ds.norm(F, 2 * ds.j) ** 2
    k = int(np.argmin(q))
    c_first = float(q[: n + modes.shape[1] + trials // 2].min())
    c = float(q[k])
    if polish:
        def obj(f):
            f = f.reshape(-1, 1)
            return float(ds.sqrt_form(f)[0] / ds.norm(f, 2 * ds.j)[0] ** 2)

        res = optimize.minimize(obj, F[:, k], method="L-BFGS-B", options={"maxiter": 200})
        c = min(c, float(res.fun))
    # a zero mode gives c at roundoff level; positivity is judged against the typical quotient
    positive = c > 1e-9 * float(np.median(q))
    stable = positive and (c_first - c) <= 0.5 * c_first
    return bool(positive), c, {"unpolished": float(q[k]), "first_half": c_first, "stable": bool(stable)}


def check_m2(ds: DiscreteSemigroup, scales=(0.5, 1.0, 2.0)) -> dict:
    """Local square-integrability of phi_s and 1/phi_s: on a finite set, finiteness of both sums."""
    out = {}
    for s in scales:
        p = ds.phi(s)
        out[s] = (float(np.sum(ds.mu * p * p)), float(np.sum(ds.mu / (p * p))))
    ok = all(math.isfinite(a) and math.isfinite(b) for a, b in out.values())
    return {"holds": ok, "sums": out}


def weighted_l1_norm(ds: DiscreteSemigroup, s: float, t: float) -> float:
    """mu-weighted L1 -> L1 norm of diag(phi_s) exp(-tL) diag(phi_s)^{-1}: the max weighted column sum."""
    p = ds.phi(s)
    P = p[:, None] * ds.expm(t) / p[None, :]
    return float(np.max(np.sum(ds.mu[:, None] * np.abs(P), axis=0) / ds.mu))


def check_m3(ds: DiscreteSemigroup, s: float, t_grid=None) -> float:
    """c_1(s) = max over t in (0, s] of the weighted L1 operator norm."""
    t_grid = s * np.geomspace(1e-3, 1.0, 25) if t_grid is None else np.asarray(t_grid)
    if np.any(t_grid > s * (1 + 1e-12)) or np.any(t_grid <= 0):
        raise LabError("t grid must lie in (0, s]")
    return max(weighted_l1_norm(ds, s, t) for t in t_grid)


def check_m4(ds: DiscreteSemigroup, scales=None) -> float:
    """c_0 = inf over s and x of phi_s(x)."""
    scales = np.geomspace(1e-3, 1e3, 61) if scales is None else scales
    return float(min(ds.phi(s).min() for s in scales))


# ----------------------------------------------------------------------------
# conclusions


def nie_ratio(ds: DiscreteSemigroup, t: float, weighted: bool = True) -> np.ndarray:
    """t^{j'} |K_t(x, y)| / (phi_t(x) phi_t(y)) on the inner points."""
    K = np.abs(ds.kernel(t))
    m = ds.inner
    K = K[np.ix_(m, m)]
    if weighted:
        p = ds.phi(t)[m]
        K = K / (p[:, None] * p[None, :])
    return t**ds.j_prime * K


def nie_constant(ds: DiscreteSemigroup, t_grid, weighted: bool = True):
    vals = [float(nie_ratio(ds, t, weighted).max()) for t in t_grid]
    k = int(np.argmax(vals))
    return vals[k], float(t_grid[k]), vals


def check_nie(ds: DiscreteSemigroup, t_grid, finer: DiscreteSemigroup | None = None, tol: float = 0.25) -> RatioReport:
    """C = max t^{j'} K_t / (phi_t phi_t); pass iff finite and stable within tol against ``finer``."""
    t_grid = np.asarray(t_grid, dtype=float)
    C, t_arg, per_t = nie_constant(ds, t_grid)
    lo = min(per_t)
    consts = {"C": C, "C_per_t": per_t, "j_prime": ds.j_prime}
    stable = True
    if finer is not None:
        C2, _, _ = nie_constant(finer, t_grid)
        consts["C_finer"] = C2
        consts["drift"] = abs(C2 - C) / max(C, C2)
        stable = consts["drift"] <= tol
        u1, _, _ = nie_constant(ds, t_grid, weighted=False)
        u2, _, _ = nie_constant(finer, t_grid, weighted=False)
        consts["unweighted"] = u1
        consts["unweighted_finer"] = u2
    verdict = bool(math.isfinite(C) and C > 0 and stable)
    return RatioReport("nie", {"t": t_grid.tolist(), **ds.meta}, lo, C, {}, {"t": t_arg}, consts, verdict,
                       f"finite, drift across resolutions <= {tol}", stable, dict(ds.meta))


def one_to_two_norm(ds: DiscreteSemigroup, s: float, t: float) -> float:
    """||e^{-t L_phi}||_{1 -> 2} on L^p(phi_s^2 mu), L_phi = Phi^{-1} L Phi."""
    p = ds.phi(s)
    E = ds.expm(t)
    col = np.sqrt(np.sum(ds.mu[:, None] * E * E, axis=0))
    return float(np.max(col / (p * ds.mu)))


def check_smoothing_12(ds: DiscreteSemigroup, s: float, t_grid=None) -> dict:
    """c(s) = max over t <= s of t^{j'/2} ||e^{-t L_phi_s}||_{1->2, phi_s}."""
    t_grid = s * np.geomspace(1e-3, 1.0, 25) if t_grid is None else np.asarray(t_grid)
    vals = [t ** (ds.j_prime / 2) * one_to_two_norm(ds, s, t) for t in t_grid]
    k = int(np.argmax(vals))
    return {"c": float(vals[k]), "t_arg": float(t_grid[k]), "per_t": [float(v) for v in vals], "finite": bool(np.all(np.isfinite(vals)))}


def squaring_bound(ds: DiscreteSemigroup, s: float, t: float) -> tuple[float, float]:
    """(max K_{2t}/(phi_s phi_s), ||e^{-t L_phi}||_{1->2}^2); the first never exceeds the second."""
    p = ds.phi(s)
    K = ds.kernel(2 * t) / (p[:, None] * p[None, :])
    return float(np.abs(K).max()), one_to_two_norm(ds, s, t) ** 2


# ----------------------------------------------------------------------------
# invariants


def invariants(ds: DiscreteSemigroup, times=(0.1, 0.5, 1.0)) -> dict:
    """Max-norm defects: eigen vs scaling-and-squaring, semigroup property, weighted self-adjointness."""
    out = {"expm_defect": 0.0, "semigroup_defect": 0.0, "weighted_symmetry_defect": 0.0}
    for t in times:
        E = ds.expm(t)
        scale = max(1.0, np.abs(E).max())
        out["expm_defect"] = max(out["expm_defect"], float(np.abs(E - ds.expm_direct(t)).max() / scale))
        E2 = ds.expm(2 * t)
        out["semigroup_defect"] = max(out["semigroup_defect"], float(np.abs(E2 - E @ E).max() / scale))
    for s in (0.5, 1.0, 2.0):
        p = ds.phi(s)
        Lp = ds.L * p[None, :] / p[:, None]
        G = (p * p * ds.mu)[:, None] * Lp
        out["weighted_symmetry_defect"] = max(out["weighted_symmetry_defect"], float(np.abs(G - G.T).max() / max(1.0, np.abs(G).max())))
    return out


def run_lab(ds: DiscreteSemigroup, finer: DiscreteSemigroup | None = None, scales=(0.5, 1.0, 2.0), t_grid=None, seed: int = 0) -> dict:
    """All hypotheses and conclusions for one instance (plus an optional finer resolution)."""
    holds, c_s, m1 = check_m1(ds, seed=seed)
    m2 = check_m2(ds, scales)
    c1 = {s: check_m3(ds, s) for s in scales}
    c0 = check_m4(ds)
    if t_grid is None:
        t_grid = np.geomspace(0.1, 2.5, 15)
    nie = check_nie(ds, t_grid, finer)
    sm = {s: check_smoothing_12(ds, s) for s in scales}
    inv = invariants(ds)
    return {
        "M1": {"holds": holds, "c_S": c_s, **m1},
        "M2": m2,
        "M3": {"c_1": c1, "variation": (max(c1.values()) - min(c1.values())) / max(c1.values())},
        "M4": {"c_0": c0, "holds": c0 > 0},
        "NIE": nie.to_dict(),
        "smoothing": sm,
        "invariants": inv,
        "seed": seed,
    }
