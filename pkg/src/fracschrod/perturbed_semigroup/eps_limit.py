"""Monotone epsilon -> 0 extrapolation of kernel tables."""

from __future__ import annotations

import numpy as np

from .table import KernelTable


class MonotonicityError(ValueError):
    pass


def eps_limit(tables: list[KernelTable], noise: float = 3.0) -> KernelTable:
    """Aitken extrapolation in eps over the last three tables, clamped to the monotone bracket.

    The tables must share (t, source, targets) and have strictly decreasing
    eps. Values must not decrease as eps decreases beyond ``noise`` times the
    reported errors.
    """
    if len(tables) < 3:
        raise ValueError("eps_limit needs at least three tables")
    eps = [tb.eps for tb in tables]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("tables must be ordered by strictly decreasing eps")
    ref = tables[0]
    for tb in tables[1:]:
        if tb.values.shape != ref.values.shape or not np.allclose(tb.targets, ref.targets):
            raise ValueError("tables do not share a grid")
    vals = np.stack([tb.values for tb in tables])
    errs = np.stack([tb.error if tb.error is not None else np.zeros_like(tb.values) for tb in tables])
    steps = np.diff(vals, axis=0)
    slack = noise * (errs[1:] + errs[:-1]) + 1e-14 * np.abs(vals[1:])
    if np.any(steps < -slack):
        bad = np.argwhere(steps < -slack)[0]
        raise MonotonicityError(f"kernel decreases as eps decreases at index {tuple(bad)}")
    q1, q2, q3 = vals[-3], vals[-2], vals[-1]
    d1, d2 = q2 - q1, q3 - q2
    denom = d2 - d1
    with np.errstate(divide="ignore", invalid="ignore"):
        aitken = np.where(np.abs(denom) > 1e-300, q3 - d2 * d2 / denom, q3)
    inc = np.maximum(d2, 0.0)
    lim = np.clip(aitken, q3, q3 + 2.0 * inc)
    residual = np.abs(aitken - lim) + inc
    meta = {
        "eps_schedule": eps,
        "extrapolation_residual_max": float(np.max(residual)) if residual.size else 0.0,
        "tag": "Lambda-kernel approximation",
    }
    return KernelTable(ref.t, ref.source, ref.targets, lim, "eps_limit", 0.0, residual + errs[-1], meta)
