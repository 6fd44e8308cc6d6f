"""Acceptance verification suite.

Each criterion is a function returning a CriterionResult with PASS/FAIL,
the measured numbers, and CSV-ready rows.  Tolerances come from the
central config; sampling-noise-driven tolerances are widened by
max(1, 1/sqrt(budget_scale)) when budgets are reduced (the declared
scaling table), while exact-arithmetic tolerances are never relaxed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL
from .geometry.curvature import (curvature_scan, curvature_tensor,
                                 riemann_symmetry_residuals,
                                 sectional_curvature)
from .geometry.distances import (diameter_estimate, geodesic_distances,
                                 volume_estimate)
from .geometry.metric import builtin_metric
from .action import builtin_action
from .cheeger import (CheegerContext, cheeger_tensor_inverse, deformed_metric,
                      hopf_submersion, oneill_residual, product_submersion,
                      rhs_curvature)
from .foliation import (collapse_scan, hopf_s3_model, singular_collapse_metric,
                        t2_s3_singular_model, torus_linear_model,
                        volume_decay_fit)
from .gh import gh_brute_force, gh_upper_bound, quotient_sample, validate_metric
from .groupoid import (group_case_action, groupoid_cheeger_metric,
                       groupoid_cheeger_tensor, horizontal_lift,
                       rhs_full_curvature, second_fundamental_form)

TOL = DEFAULT_TOL


@dataclass
class CriterionResult:
    cid: str
    description: str
    passed: bool
    details: dict
    rows: list
    row_header: tuple
    elapsed: float


def _noise_factor(budget_scale):
    return max(1.0, 1.0 / math.sqrt(budget_scale))


def _scaled(n, budget_scale, floor=8):
    return max(floor, int(round(n * budget_scale)))


# ---------------------------------------------------------------------------

def criterion_1_curvature_engine(seed=0, budget_scale=1.0) -> CriterionResult:
    """Unit S^3 sectional = 1, flat T^3 = 0, Riemann symmetries."""
    t0 = time.time()
    n_pts = _scaled(100, budget_scale)
    rows = []
    s3 = builtin_metric("s3")
    rep3 = curvature_scan(s3, s3.manifold.sample(n_pts, seed), 5, seed + 1)
    t3 = builtin_metric("t3")
    rept = curvature_scan(t3, t3.manifold.sample(n_pts, seed), 5, seed + 1)
    sym_worst = 0.0
    for p in s3.manifold.sample(10, seed + 2).points:
        r = riemann_symmetry_residuals(curvature_tensor(s3, p))
        sym_worst = max(sym_worst, r["antisymmetry"], r["pair"], r["bianchi"])
    for e in rep3.entries:
        rows.append(("s3", e[0].patch_id, *e[0].coords, e[2]))
    for e in rept.entries:
        rows.append(("t3", e[0].patch_id, *e[0].coords, e[2]))
    ok = (abs(rep3.min_K - 1) <= 1e-4 and abs(rep3.max_K - 1) <= 1e-4
          and abs(rept.min_K) <= 1e-7 and abs(rept.max_K) <= 1e-7
          and sym_worst <= 1e-7)
    det = {"s3_min": rep3.min_K, "s3_max": rep3.max_K,
           "t3_min": rept.min_K, "t3_max": rept.max_K,
           "riemann_sym_worst": sym_worst}
    return CriterionResult("C1", "curvature engine on S3/T3", ok, det, rows,
                           ("metric", "patch", "x0", "x1", "x2", "K"),
                           time.time() - t0)


def criterion_2_oneill(seed=0, budget_scale=1.0) -> CriterionResult:
    """Hopf S3 -> S2(1/2): |4 - (1 + 3|A|^2)| residual at sampled planes."""
    t0 = time.time()
    sub = hopf_submersion()
    n = _scaled(20, budget_scale, floor=5)
    rng = np.random.default_rng(seed)
    rows, worst = [], 0.0
    for i, q in enumerate(sub.total_field.manifold.sample(n, seed + 3).points):
        v, w = rng.standard_normal((2, 2))
        rec = oneill_residual(sub, q, v, w)
        worst = max(worst, abs(rec.residual))
        rows.append((i, rec.base_sectional, rec.total_sectional, rec.a_norm2,
                     rec.residual))
    ok = worst <= 1e-2
    return CriterionResult("C2", "O'Neill identity for the Hopf submersion",
                           ok, {"worst_residual": worst, "points": n}, rows,
                           ("point", "sec_base", "sec_total", "a_norm2",
                            "residual"), time.time() - t0)


def criterion_3_cheeger_formula(seed=0, budget_scale=1.0) -> CriterionResult:
    """Deformation-curvature cross-validation plus the Berger extremes."""
    t0 = time.time()
    draws = _scaled(50, budget_scale, floor=10)
    rows = []
    worst_rel, worst_gain = 0.0, 0.0
    rng = np.random.default_rng(seed)
    for rid in ("hopf-s1-s3", "translation-tk"):
        act = builtin_action(rid) if rid != "translation-tk" \
            else builtin_action(rid, k=2)
        for t in (0.1, 1.0, 10.0):
            ctx = CheegerContext(act, t=t, validate=False)
            gt = deformed_metric(ctx)
            sub = product_submersion(ctx)
            pts = act.manifold.sample(draws, seed + 5).points
            for i, p in enumerate(pts):
                v, w = rng.standard_normal((2, act.manifold.dim))
                rhs = rhs_curvature(ctx, p, v, w, sub=sub)
                lhs = sectional_curvature(
                    gt, p, cheeger_tensor_inverse(ctx, p, v).components,
                    cheeger_tensor_inverse(ctx, p, w).components)
                rel = abs(lhs - rhs.sectional) / max(abs(lhs), 1.0)
                gain = rhs.total - rhs.term_base
                worst_rel = max(worst_rel, rel)
                worst_gain = min(worst_gain, gain)
                rows.append((rid, t, i, lhs, rhs.sectional, rel, gain))
    # Berger closed-form extremes at t = 1 (oracle values 0.5 and 2.5)
    act = builtin_action("hopf-s1-s3")
    ctx = CheegerContext(act, t=1.0, validate=False)
    scan = curvature_scan(deformed_metric(ctx),
                          act.manifold.sample(_scaled(60, budget_scale), seed + 6),
                          8, seed + 7, parameter=1.0)
    tol_extreme = 0.02 * _noise_factor(budget_scale)
    ok = (worst_rel <= TOL.cheeger_formula_rel
          and worst_gain >= TOL.curvature_gain
          and abs(scan.min_K - 0.5) <= tol_extreme * 0.5
          and abs(scan.max_K - 2.5) <= tol_extreme * 2.5)
    det = {"worst_rel": worst_rel, "worst_gain": worst_gain,
           "berger_min": scan.min_K, "berger_max": scan.max_K,
           "extreme_tol": tol_extreme}
    return CriterionResult("C3", "Cheeger formula cross-validation + Berger",
                           ok, det, rows,
                           ("action", "t", "draw", "direct", "rhs", "rel",
                            "gain"), time.time() - t0)


def criterion_4_regular_collapse(seed=0, budget_scale=1.0) -> CriterionResult:
    """Flat-leaf collapse of the Hopf model with bounded curvature/diameter."""
    t0 = time.time()
    model = hopf_s3_model()
    budgets = {
        "curv_points": _scaled(60, budget_scale), "planes": 5,
        "dist_points": _scaled(460, budget_scale, floor=160),
        "k_neighbors": 12, "vol_samples": _scaled(12000, budget_scale, floor=2000),
        "gh": True, "gh_leaves": _scaled(56, budget_scale, floor=24),
        "gh_leaf_samples": 14, "gh_eps": 0.15,
        "gh_budget": _scaled(6000, budget_scale, floor=1000),
        "gh_dist_points": _scaled(460, budget_scale, floor=160),
    }
    rep = collapse_scan(model, "regular", (1.0, 0.5, 0.1, 0.01, 0.001),
                        budgets, seed)
    rows = [(r.delta, r.max_abs_K, r.min_K, r.diameter, r.volume, r.gh_bound)
            for r in rep.rows]
    nf = _noise_factor(budget_scale)
    half_pi = math.pi / 2
    diam_ok = all(0.9 * half_pi / nf <= r.diameter <= 1.1 * math.pi * nf
                  for r in rep.rows)
    final = rep.rows[-1]
    diam_final_ok = abs(final.diameter - half_pi) <= 0.10 * nf * half_pi
    curv_ok = all(r.max_abs_K <= 4.05 for r in rep.rows)
    ghs = [r.gh_bound for r in rep.rows]
    mono_ok = all(ghs[i + 1] <= ghs[i] + 0.05 * nf for i in range(len(ghs) - 1))
    gh_small = dict((r.delta, r.gh_bound) for r in rep.rows)[0.01] <= 0.35 * nf
    ok = diam_ok and diam_final_ok and curv_ok and mono_ok and gh_small
    det = {"max_abs_K": max(r.max_abs_K for r in rep.rows),
           "diam_final": final.diameter, "gh_bounds": ghs,
           "diam_ok": diam_ok, "curv_ok": curv_ok, "gh_monotone": mono_ok,
           "gh_at_0.01": gh_small}
    return CriterionResult("C4", "regular flat-leaf collapse (Hopf model)",
                           ok, det, rows,
                           ("delta", "max_abs_K", "min_K", "diameter",
                            "volume", "gh_bound"), time.time() - t0)


def criterion_5_singular_collapse(seed=0, budget_scale=1.0) -> CriterionResult:
    """Singular collapse of the T^2-on-S^3 model: volume law and boundedness."""
    t0 = time.time()
    model = t2_s3_singular_model()
    budgets = {
        "curv_points": _scaled(70, budget_scale), "planes": 4,
        "dist_points": _scaled(320, budget_scale, floor=120),
        "k_neighbors": 12, "vol_samples": _scaled(16000, budget_scale, floor=3000),
        "gh": False,
    }
    deltas = (1 / math.e, 0.1, 0.03, 0.01, 0.003, 0.001)
    rep = collapse_scan(model, "singular", deltas, budgets, seed)
    fit = volume_decay_fit(rep)
    vols = [r.volume for r in rep.rows]
    vol_decreasing = all(vols[i + 1] < vols[i] for i in range(len(vols) - 1))
    ks = [r.max_abs_K for r in rep.rows]
    growth = max(ks) / ks[0]
    ok = (vol_decreasing and 1.7 <= fit.l_hat <= 2.3 and growth < 10.0)
    rows = [(r.delta, r.max_abs_K, r.min_K, r.diameter, r.volume, r.vol_stderr)
            for r in rep.rows]
    det = {"l_hat": fit.l_hat, "m_hat": fit.m_hat, "l_stderr": fit.l_stderr,
           "curvature_growth": growth, "volumes": vols,
           "curvature_constant": max(ks)}
    return CriterionResult("C5", "singular strata collapse (T2 on S3)",
                           ok, det, rows,
                           ("delta", "max_abs_K", "min_K", "diameter",
                            "volume", "vol_stderr"), time.time() - t0)


def criterion_6_gh_module(seed=0, budget_scale=1.0) -> CriterionResult:
    """Search soundness vs the exact oracle and the one-point-space value."""
    t0 = time.time()
    rng = np.random.default_rng(seed)
    n_pairs = _scaled(50, budget_scale, floor=12)
    rows, sound, slack = [], True, []
    from scipy.sparse.csgraph import shortest_path

    def rand_space(n):
        D = rng.random((n, n))
        D = D + D.T
        np.fill_diagonal(D, 0.0)
        return shortest_path(D, directed=False)

    for i in range(n_pairs):
        nx_, ny_ = rng.integers(1, 6, size=2)
        DX, DY = rand_space(int(nx_)), rand_space(int(ny_))
        exact = gh_brute_force(DX, DY)
        eps = 0.25 * max(DX.max(), DY.max(), 0.1)
        ub = gh_upper_bound(DX, DY, eps, budget=_scaled(600, budget_scale,
                                                        floor=200), seed=seed + i)
        ok_i = ub.bound >= exact - 1e-12 and ub.witness.verify(DX, DY)
        sound &= ok_i
        slack.append(ub.bound - exact)
        rows.append((i, int(nx_), int(ny_), exact, ub.bound, ub.witness.delta,
                     int(ok_i)))
    # d_GH(point, X) = diam(X)/2, exactly, via the oracle
    DX = rand_space(4)
    exact_pt = gh_brute_force(np.zeros((1, 1)), DX)
    pt_ok = abs(exact_pt - 0.5 * DX.max()) <= 1e-12
    ok = sound and pt_ok
    det = {"pairs": n_pairs, "all_sound": sound, "mean_slack": float(np.mean(slack)),
           "point_space_value": exact_pt, "point_space_expected": 0.5 * DX.max()}
    return CriterionResult("C6", "GH search soundness vs exact oracle", ok,
                           det, rows,
                           ("pair", "nx", "ny", "exact", "bound", "delta",
                            "sound"), time.time() - t0)


def criterion_7_groupoid_reduction(seed=0, budget_scale=1.0) -> CriterionResult:
    """Groupoid pipeline reduces to the classical one on every group action."""
    t0 = time.time()
    actions = [("hopf-s1-s3", {}), ("weighted-s1-s3", {"p": 1, "q": 2}),
               ("t2-s3", {}), ("rot-s1-s2", {}), ("translation-tk", {"k": 2})]
    rng = np.random.default_rng(seed)
    rows = []
    worst_dev, worst_ii, worst_rel = 0.0, 0.0, 0.0
    n_pts = _scaled(25, budget_scale, floor=8)
    for rid, params in actions:
        act = builtin_action(rid, **params)
        ga = group_case_action(act)
        for t in (0.1, 1.0, 10.0):
            eta = groupoid_cheeger_metric(ga, t)
            gt = deformed_metric(CheegerContext(act, t=t, validate=False))
            dev = 0.0
            for p in act.manifold.sample(n_pts, seed + 11).points:
                dev = max(dev, float(np.max(np.abs(eta(p) - gt(p)))))
            worst_dev = max(worst_dev, dev)
            rows.append((rid, t, "reduction", dev))
        # group-case second fundamental form vanishes
        p = act.manifold.sample(1, seed + 12).points[0]
        v, w = rng.standard_normal((2, act.manifold.dim))
        hv = horizontal_lift(ga, 1.0, p, v)
        hw = horizontal_lift(ga, 1.0, p, w)
        ii = float(np.max(np.abs(second_fundamental_form(ga, 1.0, p, hv, hw))))
        worst_ii = max(worst_ii, ii)
        rows.append((rid, 1.0, "ii_norm", ii))
        # full curvature expression vs direct curvature of eta_eps
        ctx = CheegerContext(act, t=1.0, validate=False)
        for i in range(4):
            v, w = rng.standard_normal((2, act.manifold.dim))
            full = rhs_full_curvature(ga, 1.0, p, v, w)
            lhs = sectional_curvature(
                deformed_metric(ctx), p,
                cheeger_tensor_inverse(ctx, p, v).components,
                cheeger_tensor_inverse(ctx, p, w).components)
            rel = abs(lhs - full.sectional) / max(abs(lhs), 1.0)
            worst_rel = max(worst_rel, rel)
            rows.append((rid, 1.0, f"rhs_vs_direct_{i}", rel))
    ok = (worst_dev <= TOL.reduction_deviation and worst_ii <= 1e-8
          and worst_rel <= 1e-3)
    det = {"worst_deviation": worst_dev, "worst_ii": worst_ii,
           "worst_rhs_rel": worst_rel}
    return CriterionResult("C7", "groupoid reduction to classical deformation",
                           ok, det, rows, ("action", "eps", "check", "value"),
                           time.time() - t0)


CRITERIA = (
    criterion_1_curvature_engine,
    criterion_2_oneill,
    criterion_3_cheeger_formula,
    criterion_4_regular_collapse,
    criterion_5_singular_collapse,
    criterion_6_gh_module,
    criterion_7_groupoid_reduction,
)


def verify_all(seed=0, budget_scale=1.0):
    """Run criteria 1-7; determinism (criterion 8) is checked by the caller
    by byte-comparing the emitted CSVs of two runs with one seed."""
    return [crit(seed=seed, budget_scale=budget_scale) for crit in CRITERIA]


def rows_to_csv(header, rows) -> str:
    """Full-precision CSV text (17 significant digits for floats)."""
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.17g}"
        if isinstance(v, (np.floating,)):
            return f"{float(v):.17g}"
        return str(v)

    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(fmt(v) for v in r))
    return "\n".join(lines) + "\n"
