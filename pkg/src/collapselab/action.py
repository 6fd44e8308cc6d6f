"""Isometric actions of compact tori on the built-in manifolds.

Every registry action is either an ambient rotation action (spheres) or a
coordinate translation action (flat tori).  Rotation actions are described
by a list of ambient coordinate pairs together with the linear map sending
group angles to per-pair rotation angles; this gives closed forms for the
action map, its action fields in chart coordinates, and one-parameter
subgroups, all evaluable on hyper-dual inputs.

Registry: hopf-s1-s3, weighted-s1-s3(p,q), t2-s3, rot-s1-s2, and
translation-tk on flat tori.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT_TOL
from .errors import DimensionMismatchError
from .geometry import hyperdual as hd
from .geometry.manifolds import Manifold, Point, SampleSet, TangentVector, Torus
from .geometry.metric import MetricField, builtin_metric
from .lie import GroupElement, LieGroupData, torus_group

# Kronecker (R_d) low-discrepancy directions for orbit sweeps
_KRONECKER = {
    1: np.array([0.6180339887498949]),
    2: np.array([0.7548776662466927, 0.5698402909980532]),
    3: np.array([0.8191725133961645, 0.6710436067037893, 0.5497004779019703]),
}


class IsometricActionData:
    """Smooth isometric action with derived chart-level evaluators."""

    def __init__(self, registry_id: str, group: LieGroupData, manifold: Manifold,
                 kind: str, pairs=(), angle_map=None, base_metric: MetricField = None):
        self.registry_id = registry_id
        self.group = group
        self.manifold = manifold
        self.kind = kind                      # "rotation" | "translation"
        self.pairs = tuple(pairs)             # ambient coordinate pairs (a, b)
        # angle_map[r, i]: angle speed of pair r per unit of group coordinate i
        self.angle_map = (np.asarray(angle_map, dtype=float)
                          if angle_map is not None else np.zeros((0, group.dim)))
        self.base_metric = base_metric

    # -- group elements -------------------------------------------------------

    def _angles(self, g):
        if isinstance(g, GroupElement):
            return np.asarray(g.data, dtype=float)
        a = np.asarray(g, dtype=float)
        if a.shape != (self.group.dim,):
            raise DimensionMismatchError("group coordinate vector has wrong length")
        return a

    # -- the action -------------------------------------------------------------

    def mu_point(self, g, p: Point) -> Point:
        """mu(g, p) as a located point."""
        th = self._angles(g)
        if self.kind == "translation":
            return self.manifold.point("t", p.coords + th)
        emb = self.manifold.embed_point(p)
        return self.manifold.locate(self._rotate(th, emb))

    def mu_chart(self, theta, pid_in, x, pid_out):
        """mu in chart coordinates with a fixed output patch (generic dtype)."""
        if self.kind == "translation":
            return _addv(x, theta)
        emb = self.manifold.embed(pid_in, x)
        return self.manifold.chart(pid_out, self._rotate_generic(theta, emb))

    def _rotate(self, th, emb):
        out = np.array(emb, dtype=float)
        ang = self.angle_map @ th
        for r, (a, b) in enumerate(self.pairs):
            c, s = np.cos(ang[r]), np.sin(ang[r])
            ea, eb = out[a], out[b]
            out[a], out[b] = c * ea - s * eb, s * ea + c * eb
        return out

    def _rotate_generic(self, theta, emb):
        comps = [emb[i] for i in range(self.manifold.embed_dim)]
        for r, (a, b) in enumerate(self.pairs):
            ang = sum(self.angle_map[r, i] * theta[i] for i in range(self.group.dim))
            c, s = hd.cos(ang), hd.sin(ang)
            ea, eb = comps[a], comps[b]
            comps[a], comps[b] = c * ea - s * eb, s * ea + c * eb
        return hd.stack(comps)

    # -- infinitesimal data --------------------------------------------------------

    def field_matrix(self, pid, x):
        """Columns are the action fields E_i^*(p) in chart coordinates (generic)."""
        n, k = self.manifold.dim, self.group.dim
        if self.kind == "translation":
            return np.eye(n)[:, :k] if not isinstance(x, hd.HyperDual) \
                else hd.HyperDual(np.eye(n)[:, :k])
        emb = self.manifold.embed(pid, x)
        J = self.manifold.chart_jacobian(pid, x)
        cols = []
        for i in range(k):
            gen = [0.0 * emb[0] for _ in range(self.manifold.embed_dim)]
            for r, (a, b) in enumerate(self.pairs):
                wgt = self.angle_map[r, i]
                if wgt == 0.0:
                    continue
                gen[a] = gen[a] - wgt * emb[b]
                gen[b] = gen[b] + wgt * emb[a]
            cols.append(J @ hd.stack(gen))
        return _hstack_cols(cols)


def _addv(x, theta):
    if isinstance(x, hd.HyperDual) or isinstance(theta, hd.HyperDual):
        return hd.stack([x[i] + theta[i] for i in range(len(hd.value(x)))])
    return np.asarray(x, dtype=float) + np.asarray(theta, dtype=float)


def _hstack_cols(cols):
    if any(isinstance(c, hd.HyperDual) for c in cols):
        return hd.stack(cols, axis=0).T
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def action_field(A: IsometricActionData, x_alg, p: Point) -> TangentVector:
    """Action field of the algebra vector x at p."""
    x_alg = np.asarray(x_alg, dtype=float)
    F = A.field_matrix(p.patch_id, p.coords)
    return TangentVector(p, F @ x_alg)


def gram_matrix(A, g_field: MetricField, p: Point):
    F = A.field_matrix(p.patch_id, p.coords)
    G = g_field(p)
    return F.T @ G @ F, F, G


def shape_tensor(A, g_field: MetricField, p: Point):
    """S(p) with Q(S(p)x, y) = g(X*(p), Y*(p)); Q-self-adjoint, PSD."""
    gram, _, _ = gram_matrix(A, g_field, p)
    return np.linalg.solve(A.group.Q, gram)


def split_tangent(A, g_field: MetricField, p: Point, v):
    """Split v into orbit-tangent + normal parts; x is the least-Q-norm preimage."""
    if isinstance(v, TangentVector):
        v = v.components
    v = np.asarray(v, dtype=float)
    gram, F, G = gram_matrix(A, g_field, p)
    b = F.T @ G @ v
    Qi = np.linalg.inv(A.group.Q)
    lam = np.linalg.pinv(gram @ Qi @ gram, rcond=1e-12, hermitian=True) @ b
    x = Qi @ gram @ lam
    v_tan = F @ x
    return TangentVector(p, v_tan), TangentVector(p, v - v_tan), x


def orbit_sample(A, p: Point, count: int, seed: int = 0):
    """Images of p under a low-discrepancy sweep of the group."""
    k = A.group.dim
    L = A.group.period
    rng = np.random.default_rng(seed)
    offset = rng.random(k) * L
    gamma = _KRONECKER.get(k, np.linspace(0.5, 0.9, k))
    out = []
    for m in range(count):
        th = (offset + m * gamma * L) % L
        out.append(A.mu_point(th, p))
    return out


def jacobian_mu(A, th, p: Point, q: Point):
    """D(mu_theta) at p, expressed chart(p) -> chart(q), via dual seeds."""
    n = A.manifold.dim
    cols = []
    eye = np.eye(n)
    for a in range(n):
        out = A.mu_chart(th, p.patch_id, hd.seed(p.coords, eye[a]), q.patch_id)
        cols.append(out.e1)
    return np.stack(cols, axis=1)


def isometry_check(A, g_field: MetricField, samples, group_samples) -> float:
    """Max pullback residual ||Dmu^T g(mu p) Dmu - g(p)|| over the samples."""
    worst = 0.0
    for p in samples:
        gp = g_field(p)
        for g in group_samples:
            th = A._angles(g)
            q = A.mu_point(th, p)
            D = jacobian_mu(A, th, p, q)
            res = float(np.max(np.abs(D.T @ g_field(q) @ D - gp)))
            worst = max(worst, res)
    return worst


def validate_action(A, g_field: MetricField, n_points=8, n_group=4, seed=0,
                    tol=DEFAULT_TOL):
    """Construction-time invariants: identity, composition, isometry."""
    pts = A.manifold.sample(n_points, seed).points
    rng = np.random.default_rng(seed + 1)
    thetas = [rng.random(A.group.dim) * A.group.period for _ in range(n_group)]
    id_res = max(
        float(np.linalg.norm(A.manifold.embed_point(A.mu_point(np.zeros(A.group.dim), p))
                             - A.manifold.embed_point(p)))
        for p in pts)
    comp_res = 0.0
    for p in pts[:4]:
        for t1 in thetas[:2]:
            for t2 in thetas[2:]:
                a = A.mu_point(t1, A.mu_point(t2, p))
                b = A.mu_point((t1 + t2), p)
                comp_res = max(comp_res, float(np.linalg.norm(
                    A.manifold.embed_point(a) - A.manifold.embed_point(b))))
    iso_res = isometry_check(A, g_field, pts, thetas)
    return {"identity": id_res, "composition": comp_res, "isometry": iso_res,
            "passed": id_res <= tol.action_identity
            and comp_res <= tol.action_composition
            and iso_res <= tol.isometry_residual}


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def builtin_action(rid: str, **params) -> IsometricActionData:
    """Construct a registry action together with its canonical base metric."""
    if rid == "hopf-s1-s3":
        g = builtin_metric("s3")
        act = IsometricActionData(rid, torus_group(1), g.manifold, "rotation",
                                  pairs=[(0, 1), (2, 3)], angle_map=[[1.0], [1.0]],
                                  base_metric=g)
        return act
    if rid == "weighted-s1-s3":
        pw, qw = params.get("p", 1), params.get("q", 2)
        g = builtin_metric("s3")
        return IsometricActionData(rid, torus_group(1), g.manifold, "rotation",
                                   pairs=[(0, 1), (2, 3)],
                                   angle_map=[[float(pw)], [float(qw)]],
                                   base_metric=g)
    if rid == "t2-s3":
        g = builtin_metric("s3")
        return IsometricActionData(rid, torus_group(2), g.manifold, "rotation",
                                   pairs=[(0, 1), (2, 3)],
                                   angle_map=[[1.0, 0.0], [0.0, 1.0]],
                                   base_metric=g)
    if rid == "rot-s1-s2":
        g = builtin_metric("s2", radius=params.get("radius", 1.0))
        return IsometricActionData(rid, torus_group(1), g.manifold, "rotation",
                                   pairs=[(1, 2)], angle_map=[[1.0]], base_metric=g)
    if rid == "translation-tk":
        k = params.get("k", 2)
        period = params.get("period", 2 * np.pi)
        g = builtin_metric(f"t{k}", period=period)
        return IsometricActionData(rid, torus_group(k, period=period), g.manifold,
                                   "translation", base_metric=g)
    raise KeyError(f"unknown action registry id {rid!r}")
