"""Classical Cheeger deformation along an isometric torus action.

Given an action with fields E_i^*(p) (columns of F), bi-invariant inner
product Q and deformation parameter t, the deformed metric has the closed
matrix form

    g_t = G - G F ((1/t) Q + F^T G F)^{-1} F^T G,

equivalent to g_t(v, w) = g(Ch_t(p) v, w) with the Cheeger tensor
Ch_t = ((Id + t S)^{-1} x)^* + xi on the orbit/normal splitting.  The
formula is evaluated generically, so curvature of g_t comes out of the
hyper-dual engine directly.

The module also carries the submersion machinery for the product
(G x M, (1/t) Q + g) -> (M, g_t): vertical bases, horizontal lifts, the
A-tensor via vertical parts of brackets of horizontal extensions, and the
resulting curvature cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL
from .errors import NonHorizontalError
from .geometry import hyperdual as hd
from .geometry.curvature import curvature_tensor, sectional_from_data
from .geometry.manifolds import Point, ProductManifold, TangentVector, Torus
from .geometry.metric import MetricField, builtin_metric, product_metric
from .action import (IsometricActionData, builtin_action, jacobian_mu,
                     shape_tensor, split_tangent, validate_action)
from .lie import biinvariant_sec_term


class CheegerContext:
    """The triple (action, Q, base metric) plus the deformation parameter."""

    def __init__(self, action: IsometricActionData, base_field: MetricField = None,
                 t: float = 1.0, validate: bool = True, tol=DEFAULT_TOL):
        if t < 0:
            raise ValueError("deformation parameter t must be >= 0")
        self.action = action
        self.base_field = base_field or action.base_metric
        self.t = float(t)
        self.Q = action.group.Q
        self.tol = tol
        if validate:
            rep = validate_action(action, self.base_field, tol=tol)
            if not rep["passed"]:
                raise ValueError(f"action failed isometry validation: {rep}")

    def at(self, t: float) -> "CheegerContext":
        ctx = CheegerContext(self.action, self.base_field, t, validate=False,
                             tol=self.tol)
        return ctx


def cheeger_tensor(ctx: CheegerContext, p: Point, v) -> TangentVector:
    """Ch_t(p) v: contracts the orbit part, fixes the normal part."""
    return _apply_tensor(ctx, p, v, inverse=False)


def cheeger_tensor_inverse(ctx: CheegerContext, p: Point, v) -> TangentVector:
    return _apply_tensor(ctx, p, v, inverse=True)


def _apply_tensor(ctx, p, v, inverse):
    if isinstance(v, TangentVector):
        v = v.components
    v = np.asarray(v, dtype=float)
    vt, vp, x = split_tangent(ctx.action, ctx.base_field, p, v)
    S = shape_tensor(ctx.action, ctx.base_field, p)
    k = S.shape[0]
    M = np.eye(k) + ctx.t * S
    y = (M @ x) if inverse else np.linalg.solve(M, x)
    F = ctx.action.field_matrix(p.patch_id, p.coords)
    return TangentVector(p, F @ y + vp.components)


def deformed_metric(ctx: CheegerContext) -> MetricField:
    """The metric field g_t as a generic evaluator."""
    act, base, t = ctx.action, ctx.base_field, ctx.t
    Q = ctx.Q

    def fn(pid, x):
        G = base.matrix(pid, x)
        if t == 0.0:
            return G
        F = act.field_matrix(pid, x)
        GF = G @ F
        M = (1.0 / t) * Q + hd.transpose(F) @ GF
        return G - GF @ hd.solve(M, hd.transpose(GF))

    return MetricField(act.manifold, fn, {
        "id": "cheeger-deformed", "action": act.registry_id, "t": t,
        "base": base.descriptor})


# ---------------------------------------------------------------------------
# Riemannian submersions and the A-tensor
# ---------------------------------------------------------------------------

@dataclass
class SubmersionData:
    """A Riemannian submersion with chart-level evaluators.

    ``project_chart(pid_in, x, pid_out)`` must accept dual coordinates;
    ``vertical_basis(pid, x)`` returns a (dim_total x rank) float matrix of
    vertical spanning vectors in the total chart.
    """
    name: str
    total_field: MetricField
    base_field: MetricField
    project: callable            # Point -> Point
    project_chart: callable      # (pid_in, x, pid_out) -> coords (generic)
    vertical_basis: callable     # (pid, x) -> (n, r) float


def vertical_projector(sub: SubmersionData, pid, x):
    """g-orthogonal projector onto the vertical space (float)."""
    V = sub.vertical_basis(pid, x)
    G = np.asarray(hd.value(sub.total_field.matrix(pid, x)), dtype=float)
    M = V.T @ G @ V
    return V @ np.linalg.solve(M, V.T @ G)


def horizontal_projector(sub: SubmersionData, pid, x):
    n = sub.total_field.dim
    return np.eye(n) - vertical_projector(sub, pid, x)


def a_tensor(sub: SubmersionData, q: Point, Xt, Yt, extension="constant",
             seed=0, tol=DEFAULT_TOL) -> TangentVector:
    """A_X Y = (1/2) [Xt_ext, Yt_ext]^v for horizontal Xt, Yt at q.

    Horizontal extensions are built by projecting (near-)constant coordinate
    fields; tensoriality makes the result extension-independent, which the
    'linear' mode exists to verify.
    """
    if isinstance(Xt, TangentVector):
        Xt = Xt.components
    if isinstance(Yt, TangentVector):
        Yt = Yt.components
    Xt, Yt = np.asarray(Xt, float), np.asarray(Yt, float)
    n = sub.total_field.dim
    pid, x0 = q.patch_id, q.coords
    Pv0 = vertical_projector(sub, pid, x0)
    G0 = np.asarray(hd.value(sub.total_field.matrix(pid, x0)), dtype=float)
    scale = max(np.linalg.norm(Xt), np.linalg.norm(Yt), 1e-30)
    for vec in (Xt, Yt):
        res = np.linalg.norm(Pv0 @ vec) / scale
        if res > tol.horizontality:
            raise NonHorizontalError(f"input not horizontal (residual {res:.2e})")

    if extension == "constant":
        LX = LY = np.zeros((n, n))
    elif extension == "linear":
        rng = np.random.default_rng(seed)
        LX = rng.standard_normal((n, n)) * np.linalg.norm(Xt)
        LY = rng.standard_normal((n, n)) * np.linalg.norm(Yt)
    else:
        raise ValueError(f"unknown extension mode {extension!r}")

    def fields(x):
        Ph = np.eye(n) - vertical_projector(sub, pid, x)
        d = x - x0
        return Ph @ (Xt + LX @ d), Ph @ (Yt + LY @ d)

    h = tol.fd_step
    dX = np.zeros((n, n))   # dX[d, i] = d_d Xfield^i
    dY = np.zeros((n, n))
    eye = np.eye(n)

    def stencil(step):
        gx = np.zeros((n, n))
        gy = np.zeros((n, n))
        for d in range(n):
            xp, yp = fields(x0 + step * eye[d])
            xm, ym = fields(x0 - step * eye[d])
            gx[d] = (xp - xm) / (2 * step)
            gy[d] = (yp - ym) / (2 * step)
        return gx, gy

    if tol.fd_richardson:
        g1x, g1y = stencil(h)
        g2x, g2y = stencil(2 * h)
        dX, dY = (4 * g1x - g2x) / 3.0, (4 * g1y - g2y) / 3.0
    else:
        dX, dY = stencil(h)

    bracket = np.einsum("d,di->i", Xt, dY) - np.einsum("d,di->i", Yt, dX)
    return TangentVector(q, Pv0 @ bracket * 0.5)


def lift_base_vectors(sub: SubmersionData, q: Point, vecs):
    """Horizontal lifts at q of tangent vectors at project(q)."""
    b = sub.project(q)
    n = sub.total_field.dim
    eye = np.eye(n)
    cols = []
    for a in range(n):
        out = sub.project_chart(q.patch_id, hd.seed(q.coords, eye[a]), b.patch_id)
        cols.append(out.e1)
    J = np.stack(cols, axis=1)          # (dim_base, n)
    Ph = horizontal_projector(sub, q.patch_id, q.coords)
    JT = J.T @ np.linalg.inv(J @ J.T)
    return b, [Ph @ (JT @ np.asarray(v, float)) for v in vecs]


@dataclass(frozen=True)
class OneillRecord:
    residual: float
    base_sectional: float
    total_sectional: float
    a_norm2: float
    gram: float


def oneill_residual(sub: SubmersionData, q: Point, v, w, tol=DEFAULT_TOL) -> OneillRecord:
    """K_base - (K_total_on_lifts + 3|A|^2)/gram at the plane (v, w) downstairs."""
    b, (Xt, Yt) = lift_base_vectors(sub, q, (v, w))
    data = curvature_tensor(sub.total_field, q)
    num = float(np.einsum("abcd,a,b,c,d->", data.riemann, Xt, Yt, Yt, Xt))
    G = data.g
    gram = float((Xt @ G @ Xt) * (Yt @ G @ Yt) - (Xt @ G @ Yt) ** 2)
    A = a_tensor(sub, q, Xt, Yt, tol=tol)
    a2 = float(A.components @ G @ A.components)
    k_base = sectional_from_data(curvature_tensor(sub.base_field, b),
                                 np.asarray(v, float), np.asarray(w, float), tol)
    k_tot = (num + 3.0 * a2) / gram
    return OneillRecord(k_base - k_tot, k_base, num / gram, a2, gram)


# ---------------------------------------------------------------------------
# the product submersion (G x M, (1/t) Q + g) -> (M, g_t)
# ---------------------------------------------------------------------------

def product_submersion(ctx: CheegerContext) -> SubmersionData:
    if ctx.t <= 0:
        raise ValueError("product submersion needs t > 0")
    act = ctx.action
    k = act.group.dim
    gchart = Torus(k, period=act.group.period, name=f"g[{act.group.registry_id}]")
    total_man = ProductManifold(gchart, act.manifold)
    total_field = product_metric(
        total_man, ctx.Q / ctx.t, ctx.base_field,
        {"id": "cheeger-total", "t": ctx.t, "action": act.registry_id})

    def project(q: Point) -> Point:
        th, pm = total_man.point_pair(q)
        return act.mu_point(th.coords, pm)

    def project_chart(pid_in, x, pid_out):
        rp = total_man.split_pid(pid_in)
        return act.mu_chart([x[i] for i in range(k)], rp, x[k:], pid_out)

    def vertical_basis(pid, x):
        x = np.asarray(hd.value(x), dtype=float)
        rp = total_man.split_pid(pid)
        th = x[:k]
        pm = Point(rp, x[k:])
        qm = act.mu_point(th, pm)
        D = jacobian_mu(act, th, pm, qm)
        E = act.field_matrix(qm.patch_id, qm.coords)
        W = np.linalg.solve(D, E)
        return np.vstack([np.eye(k), -W])

    return SubmersionData(f"cheeger[{act.registry_id}, t={ctx.t}]",
                          total_field, deformed_metric(ctx),
                          project, project_chart, vertical_basis)


def unit_arrow_point(ctx: CheegerContext, p: Point, total_man=None) -> Point:
    """The point (theta=0, p) in the product chart."""
    k = ctx.action.group.dim
    pid = f"t{ProductManifold.SEP}{p.patch_id}"
    return Point(pid, np.concatenate([np.zeros(k), p.coords]))


def classical_horizontal_lift(ctx: CheegerContext, p: Point, v):
    """(t S x, v): the horizontal lift of Ch_t^{-1} v at the unit arrow."""
    if isinstance(v, TangentVector):
        v = v.components
    _, _, x = split_tangent(ctx.action, ctx.base_field, p, v)
    S = shape_tensor(ctx.action, ctx.base_field, p)
    return np.concatenate([ctx.t * (S @ x), np.asarray(v, float)])


@dataclass(frozen=True)
class CheegerRhs:
    """The three-term deformation curvature expression at a plane."""
    term_group: float      # t^3 K_Q(Sx, Sy) = (t^3/4)|[Sx, Sy]|_Q^2
    term_base: float       # unnormalized K_g(v, w)
    term_a: float          # 3 |A_{(tSx, v)}(tSy, w)|^2 in (1/t)Q + g
    gram_deformed: float   # gram of (Ch^-1 v, Ch^-1 w) in g_t
    gram_base: float       # gram of (v, w) in g

    @property
    def total(self):
        return self.term_group + self.term_base + self.term_a

    @property
    def sectional(self):
        return self.total / self.gram_deformed

    @property
    def sectional_base_gram(self):
        # diagnostic alternative normalization (undeformed plane gram)
        return self.total / self.gram_base


def rhs_curvature(ctx: CheegerContext, p: Point, v, w, sub: SubmersionData = None,
                  tol=DEFAULT_TOL) -> CheegerRhs:
    """Assemble the right-hand side of the deformation curvature formula."""
    if isinstance(v, TangentVector):
        v = v.components
    if isinstance(w, TangentVector):
        w = w.components
    v, w = np.asarray(v, float), np.asarray(w, float)
    act, t = ctx.action, ctx.t
    _, _, x = split_tangent(act, ctx.base_field, p, v)
    _, _, y = split_tangent(act, ctx.base_field, p, w)
    S = shape_tensor(act, ctx.base_field, p)

    term_group = t ** 3 * biinvariant_sec_term(act.group, S @ x, S @ y)

    base_data = curvature_tensor(ctx.base_field, p)
    term_base = float(np.einsum("abcd,a,b,c,d->", base_data.riemann, v, w, w, v))

    if t > 0:
        sub = sub or product_submersion(ctx)
        q0 = unit_arrow_point(ctx, p)
        hx = np.concatenate([t * (S @ x), v])
        hy = np.concatenate([t * (S @ y), w])
        A = a_tensor(sub, q0, hx, hy, tol=tol)
        Ghat = np.asarray(hd.value(sub.total_field.matrix(q0.patch_id, q0.coords)))
        term_a = 3.0 * float(A.components @ Ghat @ A.components)
    else:
        term_a = 0.0

    gt = deformed_metric(ctx)
    Gt = gt(p)
    civ = cheeger_tensor_inverse(ctx, p, v).components
    ciw = cheeger_tensor_inverse(ctx, p, w).components
    gram_t = float((civ @ Gt @ civ) * (ciw @ Gt @ ciw) - (civ @ Gt @ ciw) ** 2)
    G = base_data.g
    gram_g = float((v @ G @ v) * (w @ G @ w) - (v @ G @ w) ** 2)
    return CheegerRhs(term_group, term_base, term_a, gram_t, gram_g)


# ---------------------------------------------------------------------------
# fixed submersion examples
# ---------------------------------------------------------------------------

def hopf_submersion() -> SubmersionData:
    """Round S^3 -> S^2(1/2) along the circle fibers."""
    act = builtin_action("hopf-s1-s3")
    total_field = act.base_metric
    s3 = act.manifold
    base_field = builtin_metric("s2", radius=0.5)
    s2 = base_field.manifold

    def hopf_embed(pid, x):
        e = s3.embed(pid, x)
        # (z1, z2) -> (|z1|^2 - |z2|^2, 2 Re(z1 conj z2), 2 Im(z1 conj z2)) / 2
        a = 0.5 * (e[0] ** 2.0 + e[1] ** 2.0 - e[2] ** 2.0 - e[3] ** 2.0)
        b = e[0] * e[2] + e[1] * e[3]
        c = e[1] * e[2] - e[0] * e[3]
        return hd.stack([a, b, c])

    def project(q: Point) -> Point:
        return s2.locate(np.asarray(hd.value(hopf_embed(q.patch_id, q.coords))))

    def project_chart(pid_in, x, pid_out):
        return s2.chart(pid_out, hopf_embed(pid_in, x))

    def vertical_basis(pid, x):
        x = np.asarray(hd.value(x), dtype=float)
        F = act.field_matrix(pid, x)
        return F.reshape(3, 1)

    return SubmersionData("hopf[s3->s2(1/2)]", total_field, base_field,
                          project, project_chart, vertical_basis)


def trivial_product_submersion(period=2 * np.pi) -> SubmersionData:
    """(T^2 x T^1, flat) -> T^2: integrable horizontal distribution, A = 0."""
    fiber = Torus(1, period=period, name="t1-fiber")
    base_field = builtin_metric("t2", period=period)
    total_man = ProductManifold(fiber, base_field.manifold)
    total_field = product_metric(total_man, np.eye(1), base_field,
                                 {"id": "product-t2xt1"})

    def project(q: Point) -> Point:
        _, pm = total_man.point_pair(q)
        return pm

    def project_chart(pid_in, x, pid_out):
        return hd.stack([x[1], x[2]])

    def vertical_basis(pid, x):
        return np.array([[1.0], [0.0], [0.0]])

    return SubmersionData("product[t2xt1->t2]", total_field, base_field,
                          project, project_chart, vertical_basis)
