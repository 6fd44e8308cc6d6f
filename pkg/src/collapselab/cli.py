"""Configuration-driven command line front end.

Usage:
    collapselab run CONFIG.json [--out DIR] [--seed N] [--budget-scale F]

The config is a single JSON document selecting one experiment kind with
its schedules and budgets.  Outputs: report.json (config echo, verdicts,
wall clock), rows.csv (one row per sample/parameter, 17 significant
digits), and plot_*.dat columnar files.  Exit code 0 means every declared
verdict passed, 1 means at least one failed, 2 means a config/IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import DEFAULT_TOL
from .errors import CollapseLabError, ConfigError
from .geometry.curvature import curvature_scan
from .geometry.metric import builtin_metric
from .action import builtin_action
from .cheeger import (CheegerContext, cheeger_tensor_inverse, deformed_metric,
                      product_submersion, rhs_curvature)
from .geometry.curvature import sectional_curvature
from .foliation import (collapse_scan, hopf_s3_model, t2_s3_singular_model,
                        torus_linear_model, volume_decay_fit)
from .gh import gh_brute_force, gh_upper_bound
from .groupoid import group_case_action, groupoid_cheeger_metric
from .verify import CRITERIA, rows_to_csv, verify_all

KINDS = ("curvature", "cheeger", "collapse", "singular-collapse", "gh",
         "groupoid", "verify-all")

MODELS = {
    "hopf-s3": hopf_s3_model,
    "t2-s3-singular": t2_s3_singular_model,
    "t3-linear": torus_linear_model,
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"config kind must be one of {KINDS}, got {kind!r}")
    if "seed" not in cfg or not isinstance(cfg["seed"], int):
        raise ConfigError("config must declare an integer seed (no implicit entropy)")
    for key in ("deltas", "t_grid", "eps_grid"):
        if key in cfg:
            vals = cfg[key]
            if not isinstance(vals, list) or not vals or \
                    not all(isinstance(v, (int, float)) for v in vals):
                raise ConfigError(f"schedule {key!r} must be a nonempty number list")
    for key in ("samples", "planes", "draws", "pairs", "budget"):
        if key in cfg and (not isinstance(cfg[key], int) or cfg[key] <= 0):
            raise ConfigError(f"budget {key!r} must be a positive integer")
    return cfg


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _exp_curvature(cfg, seed, scale):
    m = cfg.get("metric", {"id": "s3"})
    fld = builtin_metric(m["id"], **m.get("params", {}))
    n = max(8, int(cfg.get("samples", 100) * scale))
    planes = cfg.get("planes", 5)
    rep = curvature_scan(fld, fld.manifold.sample(n, seed), planes, seed + 1)
    rows = [(i, e[0].patch_id, *e[0].coords, e[2])
            for i, e in enumerate(rep.entries)]
    ncoords = fld.manifold.dim
    header = ("entry", "patch") + tuple(f"x{i}" for i in range(ncoords)) + ("K",)
    verdicts = {}
    if "expect_K" in cfg:
        tol = cfg.get("expect_tol", 1e-4)
        k0 = cfg["expect_K"]
        verdicts["curvature-in-range"] = (abs(rep.min_K - k0) <= tol
                                          and abs(rep.max_K - k0) <= tol)
    summary = {"min_K": rep.min_K, "max_K": rep.max_K, "points": n,
               "planes": planes}
    plots = {"curvature": (("# entry K",),
                           [(r[0], r[-1]) for r in rows])}
    return verdicts, header, rows, summary, plots


def _exp_cheeger(cfg, seed, scale):
    a = cfg.get("action", {"id": "hopf-s1-s3"})
    act = builtin_action(a["id"], **a.get("params", {}))
    t_grid = cfg.get("t_grid", [0.1, 1.0, 10.0])
    draws = max(5, int(cfg.get("draws", 50) * scale))
    rng = np.random.default_rng(seed)
    rows, worst = [], 0.0
    for t in t_grid:
        ctx = CheegerContext(act, t=float(t), validate=False)
        gt = deformed_metric(ctx)
        sub = product_submersion(ctx) if t > 0 else None
        for i, p in enumerate(act.manifold.sample(draws, seed + 2).points):
            v, w = rng.standard_normal((2, act.manifold.dim))
            rhs = rhs_curvature(ctx, p, v, w, sub=sub)
            lhs = sectional_curvature(
                gt, p, cheeger_tensor_inverse(ctx, p, v).components,
                cheeger_tensor_inverse(ctx, p, w).components)
            rel = abs(lhs - rhs.sectional) / max(abs(lhs), 1.0)
            worst = max(worst, rel)
            rows.append((float(t), i, lhs, rhs.sectional, rel))
    verdicts = {"formula-cross-validation": worst <= DEFAULT_TOL.cheeger_formula_rel}
    summary = {"worst_rel": worst, "t_grid": list(map(float, t_grid)),
               "draws": draws}
    plots = {"cheeger": (("# t rel_residual",), [(r[0], r[4]) for r in rows])}
    return verdicts, ("t", "draw", "direct", "rhs", "rel"), rows, summary, plots


def _exp_collapse(cfg, seed, scale, singular=False):
    model_id = cfg.get("model", "t2-s3-singular" if singular else "hopf-s3")
    model = MODELS[model_id](**cfg.get("model_params", {}))
    deltas = cfg.get("deltas", [1 / np.e, 0.1, 0.03, 0.01, 0.003, 0.001]
             if singular else [1.0, 0.5, 0.1, 0.01, 0.001])
    budgets = dict(cfg.get("budgets", {}))
    for key in ("curv_points", "dist_points", "vol_samples", "gh_leaves"):
        if key in budgets:
            budgets[key] = max(8, int(budgets[key] * scale))
    mode = "singular" if singular else "regular"
    rep = collapse_scan(model, mode, deltas, budgets, seed)
    rows = [(r.delta, r.max_abs_K, r.min_K, r.diameter, r.volume, r.vol_stderr,
             r.gh_bound if r.gh_bound is not None else float("nan"))
            for r in rep.rows]
    verdicts, summary = {}, {"model": model_id, "mode": mode}
    if "max_abs_cap" in cfg:
        verdicts["curvature-bounded"] = all(r.max_abs_K <= cfg["max_abs_cap"]
                                            for r in rep.rows)
    if singular:
        fit = volume_decay_fit(rep)
        lo, hi = cfg.get("l_range", [1.7, 2.3])
        vols = [r.volume for r in rep.rows]
        verdicts["volume-decreasing"] = all(
            vols[i + 1] < vols[i] for i in range(len(vols) - 1))
        verdicts["volume-exponent"] = lo <= fit.l_hat <= hi
        ks = [r.max_abs_K for r in rep.rows]
        verdicts["curvature-growth"] = max(ks) / ks[0] < cfg.get("growth_cap", 10.0)
        summary.update({"l_hat": fit.l_hat, "m_hat": fit.m_hat})
    plots = {"collapse": (("# delta max_abs_K diameter volume",),
                          [(r[0], r[1], r[3], r[4]) for r in rows])}
    return verdicts, ("delta", "max_abs_K", "min_K", "diameter", "volume",
                      "vol_stderr", "gh_bound"), rows, summary, plots


def _exp_gh(cfg, seed, scale):
    from scipy.sparse.csgraph import shortest_path
    rng = np.random.default_rng(seed)
    pairs = max(5, int(cfg.get("pairs", 30) * scale))
    budget = max(100, int(cfg.get("budget", 600) * scale))
    rows, sound = [], True
    for i in range(pairs):
        nx_, ny_ = rng.integers(1, 6, size=2)
        DX = rng.random((nx_, nx_)); DX += DX.T; np.fill_diagonal(DX, 0)
        DY = rng.random((ny_, ny_)); DY += DY.T; np.fill_diagonal(DY, 0)
        DX = shortest_path(DX, directed=False)
        DY = shortest_path(DY, directed=False)
        exact = gh_brute_force(DX, DY)
        ub = gh_upper_bound(DX, DY, 0.25 * max(DX.max(), DY.max(), 0.1),
                            budget=budget, seed=seed + i)
        ok = ub.bound >= exact - 1e-12
        sound &= ok
        rows.append((i, exact, ub.bound, ub.witness.delta, int(ok)))
    verdicts = {"upper-bound-sound": sound}
    summary = {"pairs": pairs}
    plots = {"gh": (("# pair bound",), [(r[0], r[2]) for r in rows])}
    return verdicts, ("pair", "exact", "bound", "delta", "sound"), rows, \
        summary, plots


def _exp_groupoid(cfg, seed, scale):
    ids = cfg.get("actions", ["hopf-s1-s3", "t2-s3", "rot-s1-s2"])
    eps_grid = cfg.get("eps_grid", [0.1, 1.0, 10.0])
    n_pts = max(6, int(cfg.get("samples", 25) * scale))
    rows, worst = [], 0.0
    for rid in ids:
        act = builtin_action(rid)
        ga = group_case_action(act)
        for eps in eps_grid:
            eta = groupoid_cheeger_metric(ga, float(eps))
            gt = deformed_metric(CheegerContext(act, t=float(eps),
                                                validate=False))
            dev = 0.0
            for p in act.manifold.sample(n_pts, seed + 3).points:
                dev = max(dev, float(np.max(np.abs(eta(p) - gt(p)))))
            worst = max(worst, dev)
            rows.append((rid, float(eps), dev))
    verdicts = {"reduction-exact": worst <= DEFAULT_TOL.reduction_deviation}
    summary = {"worst_deviation": worst}
    plots = {"groupoid": (("# eps deviation",), [(r[1], r[2]) for r in rows])}
    return verdicts, ("action", "eps", "deviation"), rows, summary, plots


def _exp_verify_all(cfg, seed, scale):
    results = verify_all(seed=seed, budget_scale=scale)
    rows = [(r.cid, r.description, int(r.passed), r.elapsed) for r in results]
    verdicts = {r.cid: r.passed for r in results}
    summary = {r.cid: r.details for r in results}
    plots = {}
    return verdicts, ("criterion", "description", "passed", "elapsed"), rows, \
        summary, plots, results


def run(config_path, out_dir=None, seed=None, budget_scale=1.0):
    """Execute one experiment; returns (exit_code, report dict)."""
    t0 = time.time()
    cfg = load_config(config_path)
    if seed is not None:
        cfg["seed"] = int(seed)
    kind = cfg["kind"]
    s = cfg["seed"]
    extra_results = None
    if kind == "curvature":
        out = _exp_curvature(cfg, s, budget_scale)
    elif kind == "cheeger":
        out = _exp_cheeger(cfg, s, budget_scale)
    elif kind == "collapse":
        out = _exp_collapse(cfg, s, budget_scale, singular=False)
    elif kind == "singular-collapse":
        out = _exp_collapse(cfg, s, budget_scale, singular=True)
    elif kind == "gh":
        out = _exp_gh(cfg, s, budget_scale)
    elif kind == "groupoid":
        out = _exp_groupoid(cfg, s, budget_scale)
    else:
        out = _exp_verify_all(cfg, s, budget_scale)
        extra_results = out[5]
        out = out[:5]
    verdicts, header, rows, summary, plots = out

    report = {
        "config": cfg,
        "budget_scale": budget_scale,
        "verdicts": {k: bool(v) for k, v in verdicts.items()},
        "summary": _jsonable(summary),
        "wall_clock_s": time.time() - t0,
    }
    if out_dir is not None:
        emit_outputs(Path(out_dir), report, header, rows, plots, extra_results)
    code = 0 if all(verdicts.values()) else 1
    return code, report


def emit_outputs(out: Path, report, header, rows, plots, extra_results=None):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    with open(out / "rows.csv", "w") as fh:
        fh.write(rows_to_csv(header, rows))
    for name, (hdr_lines, cols) in plots.items():
        emit_plotdata(out / f"plot_{name}.dat", hdr_lines, cols)
    if extra_results is not None:
        for r in extra_results:
            with open(out / f"criterion_{r.cid}.csv", "w") as fh:
                fh.write(rows_to_csv(r.row_header, r.rows))


def emit_plotdata(path, header_lines, columns):
    """Whitespace-separated columnar data, '#'-prefixed header line(s)."""
    with open(path, "w") as fh:
        for h in header_lines:
            fh.write(h if h.startswith("#") else "# " + h)
            fh.write("\n")
        for row in columns:
            fh.write(" ".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="collapselab",
                                 description="metric deformation laboratory")
    sub = ap.add_subparsers(dest="cmd", required=True)
    runp = sub.add_parser("run", help="run an experiment from a JSON config")
    runp.add_argument("config")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--budget-scale", type=float, default=1.0)
    args = ap.parse_args(argv)
    try:
        code, report = run(args.config, args.out, args.seed, args.budget_scale)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2
    except CollapseLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for k, v in report["verdicts"].items():
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
