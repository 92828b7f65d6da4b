"""Command-line front end.

Exit codes: 0 success, 2 a verification failed, 1 usage or configuration error.
Every JSON output embeds the tool version and a hash of the run configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .constants import ParameterError, ProblemParams, derive
from .perturbed_semigroup.table import _atomic_write, jsonable

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def run_config(a) -> dict:
    """The parsed flags as a plain dict (the handler function is dropped)."""
    return {k: v for k, v in vars(a).items() if k != "fn"}


def _stamp(payload: dict, config: dict) -> dict:
    return {**payload, "version": __version__, "run_config": jsonable(config), "config_hash": config_hash(config)}


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        _atomic_write(path, text.encode("utf-8"))


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str | None, header: list[str], rows) -> None:
    """Header line, RFC 4180 quoting, '.' decimals, 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _write_text(path, buf.getvalue())


def _dump_json(obj) -> str:
    return json.dumps(_finite(jsonable(obj)), sort_keys=True, indent=2)


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _params(a) -> ProblemParams:
    return ProblemParams(d=a.d, alpha=a.alpha, delta=getattr(a, "delta", 0.0), eps=getattr(a, "eps", 0.0) or 0.0)


def _add_params(p, eps=False, delta=True):
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--alpha", type=float, default=1.0)
    if delta:
        p.add_argument("--delta", type=float, default=0.5)
    if eps:
        p.add_argument("--eps", type=float, default=0.0)


# ----------------------------------------------------------------------------
# subcommands


def cmd_constants(a) -> int:
    dc = derive(_params(a))
    data = dc.as_dict()
    if a.json:
        _write_text(None, _dump_json(_stamp(data, run_config(a))))
    else:
        width = max(len(k) for k in data)
        lines = [f"{k:<{width}}  {v}" for k, v in data.items() if k != "params"]
        _write_text(None, "\n".join(lines))
    return EXIT_OK


def cmd_weights(a) -> int:
    from .weights import RadialWeight

    p = ProblemParams(d=a.d, alpha=a.alpha, delta=a.delta)
    w = RadialWeight.for_params(p, s=a.s)
    r = np.linspace(a.rmax / a.samples, a.rmax, a.samples)
    u = r * a.s ** (-1.0 / a.alpha)
    rows = zip(r, w.eta(u, 0), w.eta(u, 1), w.eta(u, 2))
    write_csv(a.csv, ["r", "eta", "eta_prime", "eta_second"], rows)
    return EXIT_OK


def cmd_kernel(a) -> int:
    from .free_kernel import envelope_values, profile

    p = ProblemParams(d=a.d, alpha=a.alpha, delta=0.0)
    p.check_guard_band()
    r = np.linspace(0.0, a.rmax, a.n)
    vals = profile(a.d, a.alpha)(a.t, r)
    env = envelope_values(a.t, r, a.d, a.alpha)
    write_csv(a.csv, ["r", "p_t", "envelope"], zip(r, vals, env))
    return EXIT_OK


def cmd_operator(a) -> int:
    from . import frac_operator as fo
    from .weights import RadialWeight

    p = _params(a)
    w = RadialWeight.for_params(p)
    out = {"check": a.check, "params": asdict(p)}
    if a.check == "eigen":
        res = fo.eigen_residual(p)
        out.update({"residual": res, "pass": res <= 0.01})
    elif a.check == "c1":
        rep = fo.measure_C1_report(w)
        out.update({"C1": rep.value, "sup": rep.sup_value, "inf": rep.inf_value, "grid_points": rep.grid_points, "argext": rep.argext})
    else:
        eps = a.eps if a.eps else 0.01
        rep = fo.measure_mu1_report(w, eps, p)
        out.update({"mu1": rep.value, "eps": eps, "grid_points": rep.grid_points, "argext": rep.argext})
    _write_text(None, _dump_json(_stamp(out, run_config(a))))
    return EXIT_FAIL if out.get("pass") is False else EXIT_OK


def cmd_perturbed(a) -> int:
    from .perturbed_semigroup import MCConfig, PropagatorConfig, duhamel_picard, evolve_trotter, feynman_kac_mc, save_table
    from .perturbed_semigroup.table import KernelTable

    p = _params(a)
    x = np.array(a.x, dtype=float)
    ys = np.array(a.y, dtype=float).reshape(-1, p.d) if a.y else x[None, :]
    if len(x) != p.d:
        raise UsageError(f"--x needs {p.d} coordinates")
    if a.method == "trotter":
        tb = evolve_trotter(x, a.t, PropagatorConfig(L=a.L, N=a.N, dt=a.dt), p, ys, budget=not a.no_budget)
    elif a.method == "duhamel":
        tb = duhamel_picard(x, ys, a.t, p, budget=not a.no_budget)
    else:
        mc = MCConfig(paths=a.paths, seed=a.seed, h=a.h, estimator=a.estimator)
        res = feynman_kac_mc(x, ys, a.t, mc, p)
        tb = KernelTable([a.t], x, ys, res.estimate[None, :], "mc", p.eps, res.std_error[None, :],
                         {"seed": a.seed, "paths": a.paths, "h": a.h, "estimator": a.estimator, "unreliable": res.unreliable.tolist()})
    tb.meta = {**tb.meta, "version": __version__, "config_hash": config_hash(run_config(a)), "run_config": jsonable(run_config(a))}
    tb.meta["content_hash"] = table_digest(tb)
    if a.out:
        save_table(tb, a.out)
    rows = [{"y": y.tolist(), "value": float(v), "error": None if tb.error is None else float(e)}
            for y, v, e in zip(tb.targets, tb.values[0], tb.error[0] if tb.error is not None else [None] * len(tb.targets))]
    _write_text(None, _dump_json(_stamp({"method": tb.method, "t": a.t, "x": x.tolist(), "rows": rows}, run_config(a))))
    return EXIT_OK


SUITES = ("nash", "twosided", "l1", "mass", "lower", "hardy")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise UsageError(f"config file {path!r} not found")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def run_suite(name: str, cfg: dict):
    from . import verifier as v
    from .perturbed_semigroup.sector import SectorConfig
    from .weights import RadialWeight

    pd = {"d": 3, "alpha": 1.0, "delta": 0.5, "eps": 0.0, **cfg.get("params", {})}
    p = ProblemParams(**pd)
    quick = cfg.get("quick", False)
    if name in ("nash", "twosided"):
        times = cfg.get("times", [0.25, 1.0, 4.0] if quick else [0.25, 0.5, 1.0, 2.0, 4.0])
        n_r = cfg.get("n_r", 5 if quick else 9)
        n = cfg.get("sector_n", 400 if quick else 800)
        sc = SectorConfig(n=n, l_max=cfg.get("l_max", 400))
        table = v.kernel_grid(p, times, n_r, sc)
        fine = v.kernel_grid(p, times, 2 * n_r - 1, SectorConfig(n=int(1.5 * n), l_max=sc.l_max)) if cfg.get("refine", True) else None
        w = RadialWeight.for_params(p)
        if name == "nash":
            return [v.check_weighted_nash(table, w, fine)]
        return [v.check_two_sided(table, w, fine, ceiling=cfg.get("ceiling", 100.0))]
    if name == "l1":
        flat = cfg.get("flat", p.delta == 0)
        return [v.check_l1_bound(p, tuple(cfg.get("eps_values", (0.1, 0.01))), tuple(cfg.get("s_values", (0.5, 1.0, 2.0))), flat=flat)]
    if name == "mass":
        return [v.check_mass_upper(p)]
    if name == "lower":
        return [v.check_lower_prop(p, s=cfg.get("s", 1.0), flat=cfg.get("flat", p.delta == 0))]
    if name == "hardy":
        return [v.check_hardy_rellich(p)]
    raise UsageError(f"unknown suite {name!r}")


def cmd_verify(a) -> int:
    cfg = load_config(a.config)
    if a.delta is not None:
        cfg.setdefault("params", {})["delta"] = a.delta
    if a.quick:
        cfg["quick"] = True
    names = SUITES if a.suite == "all" else (a.suite,)
    from concurrent.futures import ThreadPoolExecutor

    from .perturbed_semigroup.trotter import worker_count

    with ThreadPoolExecutor(max_workers=min(worker_count(), len(names))) as pool:
        reports = [r for batch in pool.map(lambda n: run_suite(n, cfg), names) for r in batch]
    from .verifier import merge_reports

    merged = merge_reports(reports)
    out = _stamp({"reports": {k: r.to_dict() for k, r in merged.items()}, "all_pass": all(r.verdict for r in reports)}, {"suite": a.suite, **cfg})
    _write_text(a.out, _dump_json(out))
    if a.plots:
        emit_plots(out, a.plots)
    return EXIT_OK if out["all_pass"] else EXIT_FAIL


def cmd_theorem_a(a) -> int:
    from . import theorem_a_lab as lab

    if a.instance == "fracschrod":
        p = ProblemParams(d=3, alpha=a.alpha, delta=a.delta)
        ds = lab.radial_instance(a.n, params=p)
        finer = lab.radial_instance(2 * a.n, params=p) if 2 * a.n <= 400 else None
    elif a.instance == "cycle":
        ds, finer = lab.cycle_instance(a.n), None
    else:
        if not os.path.exists(a.instance):
            raise UsageError(f"instance file {a.instance!r} not found")
        ds, finer = lab.load_custom(a.instance), None
    out: dict = {"instance": a.instance, "n": ds.n}
    ok = True
    scales = (0.5, 1.0, 2.0)
    if a.suite in ("m1", "all"):
        holds, c_s, extra = lab.check_m1(ds, seed=a.seed)
        out["M1"] = {"holds": holds, "c_S": c_s, **extra}
        ok &= holds
    if a.suite in ("m3", "all"):
        c1 = {str(s): lab.check_m3(ds, s) for s in scales}
        out["M3"] = {"c_1": c1}
        out["M2"] = lab.check_m2(ds, scales)
        out["M4"] = {"c_0": lab.check_m4(ds)}
        ok &= out["M4"]["c_0"] > 0 and out["M2"]["holds"]
    if a.suite in ("nie", "all"):
        rep = lab.check_nie(ds, np.geomspace(0.1, 2.5, 15), finer)
        out["NIE"] = rep.to_dict()
        ok &= rep.verdict
    if a.suite in ("smoothing", "all"):
        out["smoothing"] = {str(s): lab.check_smoothing_12(ds, s) for s in scales}
    if a.suite == "all":
        out["invariants"] = lab.invariants(ds)
    out["pass"] = bool(ok)
    _write_text(a.out, _dump_json(_stamp(out, run_config(a))))
    return EXIT_OK if ok else EXIT_FAIL


def table_digest(tb) -> str:
    """sha256 over the numeric content of a kernel table."""
    h = hashlib.sha256()
    for arr in (tb.t, tb.source, tb.targets, tb.values, tb.error if tb.error is not None else np.zeros(0)):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    h.update(tb.method.encode())
    return h.hexdigest()


def cmd_report(a) -> int:
    from .perturbed_semigroup import TableFormatError, load_table

    if not os.path.exists(a.table):
        raise UsageError(f"table {a.table!r} not found")
    try:
        tb = load_table(a.table)
    except TableFormatError as exc:
        raise UsageError(f"cannot read table: {exc}") from exc
    meta = tb.meta
    checks = {
        "content_hash": meta.get("content_hash") == table_digest(tb),
        "config_hash": "run_config" in meta and meta.get("config_hash") == config_hash(meta["run_config"]),
        "nonnegative": tb.check_nonnegative(tol=1e-12),
    }
    ok = all(checks.values())
    out = {"table": a.table, "method": tb.method, "shape": list(tb.values.shape), "stored_version": meta.get("version"),
           "checks": checks, "pass": bool(ok), "version": __version__}
    _write_text(a.out, _dump_json(out))
    if a.plots:
        emit_plots({"table": {"t": tb.t.tolist(), "targets": tb.targets.tolist(), "values": tb.values.tolist(), "source": tb.source.tolist()}}, a.plots)
    return EXIT_OK if ok else EXIT_FAIL


# ----------------------------------------------------------------------------
# plots


def emit_plots(report: dict, outdir: str) -> list[str]:
    """Deterministic self-contained SVG files for a report; returns the written paths.

    Ratio reports with per-time curves give one plot per t (ratio against |x|),
    a stored kernel table gives its profile. An empty report gives no files.
    """
    if not isinstance(report, dict):
        raise UsageError("malformed report: expected a JSON object")
    jobs = []
    for rid, rep in sorted(report.get("reports", {}).items()):
        if not isinstance(rep, dict):
            raise UsageError(f"malformed report entry {rid!r}")
        for t, cur in sorted((rep.get("constants") or {}).get("curves", {}).items(), key=lambda kv: float(kv[0])):
            jobs.append((f"{rid}_t{float(t):g}.svg", _curve_plot(rid, float(t), cur)))
    if "table" in report:
        jobs.append(("kernel_profile.svg", _table_plot(report["table"])))
    if not jobs:
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    paths = []
    with matplotlib.rc_context({"svg.hashsalt": "fracschrod", "svg.fonttype": "path"}):
        for name, draw in jobs:
            fig, ax = plt.subplots(figsize=(5.5, 3.8))
            draw(ax)
            fig.tight_layout()
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": f"fracschrod {__version__}"})
            plt.close(fig)
            path = os.path.join(outdir, name)
            _atomic_write(path, buf.getvalue().encode("utf-8"))
            paths.append(path)
    return paths


def _curve_plot(rid: str, t: float, cur: dict):
    def draw(ax):
        ax.loglog(cur["r"], cur["max"], "o-", label="max over y")
        ax.loglog(cur["r"], cur["min"], "s--", label="min over y")
        ax.set_xlabel("|x|")
        ax.set_ylabel("ratio")
        ax.set_title(f"{rid}, t = {t:g}")
        ax.legend()

    return draw


def _table_plot(tab: dict):
    def draw(ax):
        src = np.array(tab["source"], dtype=float)
        dist = np.linalg.norm(np.array(tab["targets"], dtype=float) - src, axis=1)
        order = np.argsort(dist, kind="stable")
        for k, row in enumerate(tab["values"]):
            ax.semilogy(dist[order], np.array(row, dtype=float)[order], "o-", label=f"t = {tab['t'][k]:g}")
        ax.set_xlabel("|y - x|")
        ax.set_ylabel("kernel")
        ax.legend()

    return draw


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fracschrod", description="Heat kernel bounds for fractional Schrodinger operators with Hardy potentials.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="derived constants")
    _add_params(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("weights", help="weight profile eta and its derivatives as CSV")
    _add_params(p)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--rmax", type=float, default=4.0)
    p.add_argument("--csv", default=None)
    p.set_defaults(fn=cmd_weights)

    p = sub.add_parser("kernel", help="free kernel profile as CSV")
    _add_params(p, delta=False)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--rmax", type=float, default=10.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--csv", default=None)
    p.set_defaults(fn=cmd_kernel)

    p = sub.add_parser("operator", help="eigen-identity residual and the constants C1, mu1")
    _add_params(p, eps=True)
    p.add_argument("--check", choices=("eigen", "c1", "mu1"), required=True)
    p.set_defaults(fn=cmd_operator)

    p = sub.add_parser("perturbed", help="perturbed kernel by one method")
    _add_params(p, eps=True)
    p.add_argument("--method", choices=("trotter", "duhamel", "mc"), required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--y", type=float, nargs="*", default=None, help="target coordinates, d per target")
    p.add_argument("--L", type=float, default=8.0)
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--h", type=float, default=0.2)
    p.add_argument("--estimator", choices=("ball", "last_jump"), default="ball")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--no-budget", action="store_true", help="skip the refined re-run that estimates the error")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_perturbed)

    p = sub.add_parser("verify", help="certify the kernel inequalities")
    p.add_argument("--suite", choices=SUITES + ("all",), required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--quick", action="store_true", help="coarse grids")
    p.add_argument("--out", default=None)
    p.add_argument("--plots", default=None, help="directory for SVG plots")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("theorem-a", help="finite-dimensional weighted Nash laboratory")
    p.add_argument("--instance", default="fracschrod")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--suite", choices=("m1", "m3", "nie", "smoothing", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_theorem_a)

    p = sub.add_parser("report", help="re-verify a stored kernel table against its hash")
    p.add_argument("table")
    p.add_argument("--out", default=None)
    p.add_argument("--plots", default=None)
    p.set_defaults(fn=cmd_report)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
