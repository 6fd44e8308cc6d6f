"""Transformation-groupoid Cheeger deformations.

The registry covers transformation groupoids G x M => M of the torus
actions, plus the degenerate group case G => {*} acting on a manifold P,
which must reproduce the classical deformation exactly (the reduction
oracle).  Sign convention: the groupoid action field is
X*(p) = -D tbar (X, 0) at the unit arrow, the negative of the classical
action field; all derived tensors are insensitive to the sign.

The deformed-tensor naming follows the reduction oracle: Ch_eps is the
composition for which eta_eps(X, Y) = eta^P(Ch_eps(p) X, Y) reproduces the
classical deformed metric at eps = t, i.e. Ch_eps applies (Id + eps Sh)^{-1}
on the orbit part and its inverse applies (Id + eps Sh).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL
from .errors import (ConstraintViolationError, HypothesisViolatedError,
                     KernelMembershipError)
from .geometry import hyperdual as hd
from .geometry.curvature import curvature_tensor, metric_second_derivatives, \
    christoffel_from_derivatives
from .geometry.manifolds import Point, ProductManifold, RawChart, TangentVector, Torus
from .geometry.metric import MetricField, product_metric
from .action import IsometricActionData, builtin_action
from .cheeger import CheegerContext, SubmersionData, a_tensor, product_submersion


# ---------------------------------------------------------------------------
# transformation groupoids
# ---------------------------------------------------------------------------

class TransformationGroupoidData:
    """Arrow space G x M with the action-groupoid structure maps."""

    def __init__(self, action: IsometricActionData):
        self.action = action
        self.group = action.group
        self.base = action.manifold
        self.k = self.group.dim
        self.arrows = ProductManifold(
            Torus(self.k, period=self.group.period, name="arrow-angles"),
            self.base, name=f"arrows[{action.registry_id}]")

    # structure maps on located points -------------------------------------

    def split(self, h: Point):
        th, x = self.arrows.point_pair(h)
        return th.coords, x

    def source(self, h: Point) -> Point:
        _, x = self.split(h)
        return x

    def target(self, h: Point) -> Point:
        th, x = self.split(h)
        return self.action.mu_point(th, x)

    def unit(self, x: Point) -> Point:
        return self.arrows.join(np.zeros(self.k), x)

    def inverse(self, h: Point) -> Point:
        th, x = self.split(h)
        return self.arrows.join(-th, self.action.mu_point(th, x))

    def multiply(self, h2: Point, h1: Point, tol=1e-8) -> Point:
        th2, x2 = self.split(h2)
        th1, x1 = self.split(h1)
        gap = np.linalg.norm(self.base.embed_point(x2)
                             - self.base.embed_point(self.target(h1)))
        if gap > tol:
            raise ConstraintViolationError(f"arrows not composable (gap {gap:.2e})")
        return self.arrows.join(th2 + th1, x1)

    def sample_composable(self, n, seed):
        rng = np.random.default_rng(seed)
        xs = self.base.sample(n, seed).points
        out = []
        for x in xs:
            t1, t2, t3 = (rng.random((3, self.k)) * self.group.period)
            h1 = self.arrows.join(t1, x)
            h2 = self.arrows.join(t2, self.target(h1))
            h3 = self.arrows.join(t3, self.target(h2))
            out.append((h3, h2, h1))
        return out

    def arrow_gap(self, a: Point, b: Point) -> float:
        return float(np.linalg.norm(self.arrows.embed_point(a)
                                    - self.arrows.embed_point(b)))

    def base_gap(self, a: Point, b: Point) -> float:
        return float(np.linalg.norm(self.base.embed_point(a)
                                    - self.base.embed_point(b)))


def validate_groupoid(Gd: TransformationGroupoidData, n=12, seed=0,
                      tol=DEFAULT_TOL):
    """Numeric residuals of the five groupoid axiom families."""
    res = {"source-of-product": 0.0, "target-of-product": 0.0,
           "associativity": 0.0, "units": 0.0, "inverses": 0.0}
    for (h3, h2, h1) in Gd.sample_composable(n, seed):
        m21 = Gd.multiply(h2, h1)
        res["source-of-product"] = max(res["source-of-product"],
                                       Gd.base_gap(Gd.source(m21), Gd.source(h1)))
        res["target-of-product"] = max(res["target-of-product"],
                                       Gd.base_gap(Gd.target(m21), Gd.target(h2)))
        res["associativity"] = max(res["associativity"], Gd.arrow_gap(
            Gd.multiply(Gd.multiply(h3, h2), h1),
            Gd.multiply(h3, Gd.multiply(h2, h1))))
        x = Gd.source(h1)
        u = Gd.unit(x)
        res["units"] = max(
            res["units"],
            Gd.base_gap(Gd.source(u), x), Gd.base_gap(Gd.target(u), x),
            Gd.arrow_gap(Gd.multiply(h1, Gd.unit(Gd.source(h1))), h1),
            Gd.arrow_gap(Gd.multiply(Gd.unit(Gd.target(h1)), h1), h1))
        res["inverses"] = max(
            res["inverses"],
            Gd.arrow_gap(Gd.multiply(h1, Gd.inverse(h1)), Gd.unit(Gd.target(h1))),
            Gd.arrow_gap(Gd.multiply(Gd.inverse(h1), h1), Gd.unit(Gd.source(h1))))
    res["passed"] = all(v <= tol.groupoid_axioms for v in res.values()
                        if isinstance(v, float))
    return res


@dataclass
class OneMetric:
    """A metric on the arrow space making the source map a Riemannian
    submersion onto the declared base metric."""
    field: MetricField
    base_field: MetricField


def product_one_metric(Gd: TransformationGroupoidData, Q=None) -> OneMetric:
    Q = Gd.group.Q if Q is None else Q
    fld = product_metric(Gd.arrows, Q, Gd.action.base_metric,
                         {"id": "one-metric", "groupoid": Gd.arrows.name})
    return OneMetric(fld, Gd.action.base_metric)


def validate_one_metric(Gd: TransformationGroupoidData, om: OneMetric,
                        n=10, seed=0, tol=DEFAULT_TOL) -> float:
    """Residual of the source-submersion property at sampled arrows.

    The source-vertical space of a transformation groupoid is the angle
    block; the eta-horizontal complement must be mapped isometrically onto
    the base tangent space by Ds.
    """
    k, nB = Gd.k, Gd.base.dim
    worst = 0.0
    for h in Gd.arrows.sample(n, seed).points:
        H = om.field(h)
        _, x = Gd.split(h)
        # horizontal space: eta-orthogonal complement of the source-vertical
        # angle block; columns of `basis` push forward to the identity by
        # Ds = [0 | I], so the pullback must equal the base metric
        Hgg, Hgx = H[:k, :k], H[:k, k:]
        basis = np.vstack([-np.linalg.solve(Hgg, Hgx), np.eye(nB)])
        pulled = basis.T @ H @ basis
        gB = om.base_field(x)
        worst = max(worst, float(np.max(np.abs(pulled - gB))))
    return worst


# ---------------------------------------------------------------------------
# groupoid actions
# ---------------------------------------------------------------------------

class GroupoidActionData:
    """A groupoid action along alpha: P -> M with evaluable derived data.

    ``kernel`` coordinates refer to the canonical basis of
    ker D s at the unit arrow (the angle directions for transformation
    groupoids).  alpha_chart may be None for the point-base (group) case.
    """

    def __init__(self, name, groupoid, P, eta_P: MetricField,
                 eta1_kernel, action_field_matrix, alpha_chart=None,
                 alpha_point=None, mu_bar_chart=None, arrow_field=None,
                 classical_action=None):
        self.name = name
        self.groupoid = groupoid
        self.P = P
        self.eta_P = eta_P
        self.eta1_kernel = eta1_kernel            # (p) -> (k, k)
        self.action_field_matrix = action_field_matrix  # (pid, x) -> (n, k) generic
        self.alpha_chart = alpha_chart            # (pid, x, pid_out) -> coords
        self.alpha_point = alpha_point            # Point -> Point | None
        self.mu_bar_chart = mu_bar_chart          # (a_kernel, pid, x, pid_out)
        self.arrow_field = arrow_field            # 1-metric field on arrows
        self.classical_action = classical_action  # set in the group case
        self.k = eta1_kernel(None).shape[0]


def group_case_action(action: IsometricActionData) -> GroupoidActionData:
    """The group G => {*} acting on P: the reduction case."""
    Q = action.group.Q
    k = action.group.dim
    arrow_man = Torus(k, period=action.group.period, name="group-arrows")
    eye = np.eye(k)

    def arrow_fn(pid, x):
        if isinstance(x, hd.HyperDual):
            return hd.HyperDual(Q.copy())
        return Q.copy()

    arrow_field = MetricField(arrow_man, arrow_fn, {"id": "bi-invariant-arrows"})

    def afm(pid, x):
        return -action.field_matrix(pid, x)

    def mu_bar_chart(a, pid, x, pid_out):
        return action.mu_chart(a, pid, x, pid_out)

    return GroupoidActionData(
        f"group[{action.registry_id}]", None, action.manifold,
        action.base_metric, lambda p: Q, afm, alpha_chart=None,
        alpha_point=None, mu_bar_chart=mu_bar_chart, arrow_field=arrow_field,
        classical_action=action)


def left_translation_action(Gd: TransformationGroupoidData) -> GroupoidActionData:
    """The groupoid acting on its own arrows along the target map."""
    k = Gd.k
    om = product_one_metric(Gd)
    act = Gd.action

    def eta1_kernel(p):
        return Gd.group.Q

    def afm(pid, x):
        n = Gd.arrows.dim
        M = np.zeros((n, k))
        M[:k, :k] = -np.eye(k)
        if isinstance(x, hd.HyperDual):
            return hd.HyperDual(M)
        return M

    def alpha_chart(pid, x, pid_out):
        # alpha = target: (theta, m) -> mu(theta, m)
        rp = Gd.arrows.split_pid(pid)
        return act.mu_chart([x[i] for i in range(k)], rp, x[k:], pid_out)

    def alpha_point(p: Point):
        return Gd.target(p)

    def mu_bar_chart(a, pid, x, pid_out):
        # abelian group: m((a, mu(g, m)), (g, m)) = (a + g, m)
        parts = [x[i] + a[i] for i in range(k)]
        parts += [x[k + i] for i in range(Gd.base.dim)]
        return hd.stack(parts)

    return GroupoidActionData(
        f"left[{act.registry_id}]", Gd, Gd.arrows, om.field, eta1_kernel,
        afm, alpha_chart=alpha_chart, alpha_point=alpha_point,
        mu_bar_chart=mu_bar_chart, arrow_field=om.field)


def identity_alpha_fixture(action: IsometricActionData) -> GroupoidActionData:
    """Negative control: alpha = identity with positive-dimensional leaves."""
    ga = group_case_action(action)

    def alpha_chart(pid, x, pid_out):
        if pid_out != pid:
            raise ConstraintViolationError("fixture alpha keeps the patch")
        return x

    return GroupoidActionData(ga.name + "+id-alpha", None, ga.P, ga.eta_P,
                              ga.eta1_kernel, ga.action_field_matrix,
                              alpha_chart=alpha_chart,
                              alpha_point=lambda p: p,
                              mu_bar_chart=ga.mu_bar_chart,
                              arrow_field=ga.arrow_field,
                              classical_action=ga.classical_action)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def groupoid_action_field(A: GroupoidActionData, x_alg, p: Point,
                          tol=DEFAULT_TOL) -> TangentVector:
    """X*(p) = -D tbar(X, 0), differentiated through the action evaluator."""
    x_alg = np.asarray(x_alg, dtype=float)
    if x_alg.shape != (A.k,):
        raise KernelMembershipError(
            f"kernel vector must have length {A.k}")
    out = A.mu_bar_chart(hd.seed(np.zeros(A.k), x_alg),
                         p.patch_id, p.coords, p.patch_id)
    return TangentVector(p, -out.e1)


def groupoid_shape_tensor(A: GroupoidActionData, p: Point):
    """Sh(p) from eta1(Sh x, y) = eta_P(X*(p), Y*(p))."""
    F = np.asarray(hd.value(A.action_field_matrix(p.patch_id, p.coords)))
    G = A.eta_P(p)
    return np.linalg.solve(A.eta1_kernel(p), F.T @ G @ F)


def hypothesis_check(A: GroupoidActionData, n=10, seed=0, tol=DEFAULT_TOL):
    """Verify every eta_P-normal direction to the leaf is alpha-fiber tangent."""
    if A.alpha_chart is None:
        return {"passed": True, "residual": 0.0, "reason": "point base"}
    worst = 0.0
    pts = A.P.sample(n, seed).points
    for p in pts:
        G = A.eta_P(p)
        F = np.asarray(hd.value(A.action_field_matrix(p.patch_id, p.coords)))
        gram = F.T @ G @ F
        P_orb = F @ np.linalg.pinv(gram, rcond=1e-12, hermitian=True) @ F.T @ G
        n_dim = A.P.dim
        target = A.alpha_point(p)
        # alpha-differential columns
        eye = np.eye(n_dim)
        J = np.stack([A.alpha_chart(p.patch_id, hd.seed(p.coords, eye[a]),
                                    target.patch_id).e1 for a in range(n_dim)],
                     axis=1)
        comp = np.eye(n_dim) - P_orb
        for c in comp.T:
            nc = float(np.sqrt(c @ G @ c))
            if nc < 1e-10:
                continue
            worst = max(worst, float(np.linalg.norm(J @ (c / nc))))
    return {"passed": worst <= tol.hypothesis_residual, "residual": worst,
            "reason": "sampled alpha-fiber tangency"}


def split_groupoid(A: GroupoidActionData, p: Point, v):
    """Split v into leaf-tangent + normal; x is the least-norm kernel preimage."""
    v = np.asarray(v, dtype=float)
    F = np.asarray(hd.value(A.action_field_matrix(p.patch_id, p.coords)))
    G = A.eta_P(p)
    H = A.eta1_kernel(p)
    gram = F.T @ G @ F
    b = F.T @ G @ v
    Hi = np.linalg.inv(H)
    lam = np.linalg.pinv(gram @ Hi @ gram, rcond=1e-12, hermitian=True) @ b
    x = Hi @ gram @ lam
    vt = F @ x
    return vt, v - vt, x


def groupoid_cheeger_metric(A: GroupoidActionData, eps: float,
                            check_hypothesis=True, tol=DEFAULT_TOL) -> MetricField:
    """The deformed metric eta_eps on P (generic evaluator)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if check_hypothesis:
        rep = hypothesis_check(A, tol=tol)
        if not rep["passed"]:
            raise HypothesisViolatedError(
                f"normal-in-fiber hypothesis fails (residual {rep['residual']:.2e})")

    def fn(pid, x):
        G = A.eta_P.matrix(pid, x)
        F = A.action_field_matrix(pid, x)
        Hk = A.eta1_kernel(None)
        GF = G @ F
        M = (1.0 / eps) * Hk + hd.transpose(F) @ GF
        return G - GF @ hd.solve(M, hd.transpose(GF))

    return MetricField(A.P, fn, {"id": "groupoid-cheeger", "action": A.name,
                                 "eps": eps})


def groupoid_cheeger_tensor(A: GroupoidActionData, eps, p: Point, v,
                            inverse=False) -> TangentVector:
    if isinstance(v, TangentVector):
        v = v.components
    vt, vp, x = split_groupoid(A, p, np.asarray(v, float))
    Sh = groupoid_shape_tensor(A, p)
    M = np.eye(A.k) + eps * Sh
    y = (M @ x) if inverse else np.linalg.solve(M, x)
    F = np.asarray(hd.value(A.action_field_matrix(p.patch_id, p.coords)))
    return TangentVector(p, F @ y + vp)


def horizontal_lift(A: GroupoidActionData, eps, p: Point, X):
    """h(p)(X) = (-eps Sh(x), X) at the unit arrow, in kernel + T_pP coords."""
    if isinstance(X, TangentVector):
        X = X.components
    X = np.asarray(X, dtype=float)
    _, _, x = split_groupoid(A, p, X)
    Sh = groupoid_shape_tensor(A, p)
    return np.concatenate([-eps * (Sh @ x), X])


def pushforward_target(A: GroupoidActionData, p: Point, vec):
    """D tbar applied to (a, u) at the unit arrow, numerically."""
    a, u = vec[: A.k], vec[A.k:]
    out = A.mu_bar_chart(hd.seed(np.zeros(A.k), a), p.patch_id,
                         hd.seed(p.coords, u), p.patch_id)
    return out.e1


def second_fundamental_form(A: GroupoidActionData, eps, p: Point, vhat, what,
                            tol=DEFAULT_TOL):
    """II_eps of the constrained arrow-point space inside the metric product.

    Inputs are tangent vectors to G x_M P at the unit arrow over p, given in
    the ambient (kernel + P)-block coordinates of G x P.  In the group case
    the constraint is the whole product and II vanishes identically.
    """
    vhat, what = np.asarray(vhat, float), np.asarray(what, float)
    if A.alpha_chart is None:
        return np.zeros_like(vhat)
    if A.groupoid is None:
        raise ConstraintViolationError("fixture actions carry no arrow space")
    return _ii_numeric(A, eps, p, vhat, what, tol)


def _ii_numeric(A: GroupoidActionData, eps, p: Point, vhat, what, tol):
    """Constraint-parametrization second fundamental form (toral groupoid)."""
    Gd = A.groupoid
    k = Gd.k
    nM = Gd.base.dim
    nP = A.P.dim
    # P-points are arrows (g, m); the constraint manifold is parametrized by
    # u = (h, g, m) -> ambient z = (h, y=mu(g+? ...)) handled via charts below
    th_g, xm = Gd.arrows.point_pair(p)
    y_pt = Gd.target(p)
    act = Gd.action

    def psi(u):
        # u = (h, g, m) -> (h, y(g, m), g, m) in ambient chart coordinates
        h = [u[i] for i in range(k)]
        g = [u[k + i] for i in range(k)]
        m = [u[2 * k + i] for i in range(nM)]
        y = act.mu_chart(g, xm.patch_id, hd.stack(m), y_pt.patch_id)
        parts = h + [y[i] for i in range(nM)] + g + m
        return hd.stack(parts)

    dim_c = 2 * k + nM
    dim_a = 2 * k + 2 * nM
    u0 = np.concatenate([np.zeros(k), th_g.coords, xm.coords])

    Q = Gd.group.Q

    def ambient_metric(pid, z):
        # (1/eps)(Q + g(y)) + (Q + g(m)) on (h, y, g, m)
        gy = act.base_metric.matrix(y_pt.patch_id, z[k:k + nM])
        gm = act.base_metric.matrix(xm.patch_id, z[2 * k + nM:])
        return hd.blockdiag([Q / eps, gy / eps, Q, gm])

    raw = RawChart(dim_a)
    amb_field = MetricField(raw, ambient_metric, {"id": "ambient-product"})
    z0 = np.asarray(hd.value(psi(u0)), dtype=float)
    z_pt = Point("r", z0)
    g_a, dg_a, _ = metric_second_derivatives(amb_field, z_pt)
    Gamma_a, _ = christoffel_from_derivatives(g_a, dg_a)
    Ga = g_a

    eye = np.eye(dim_c)
    Dpsi = np.stack([psi(hd.seed(u0, eye[a])).e1 for a in range(dim_c)], axis=1)
    d2psi = np.zeros((dim_c, dim_c, dim_a))
    for a in range(dim_c):
        for b in range(a, dim_c):
            out = psi(hd.seed_pair(u0, eye[a], eye[b]))
            d2psi[a, b] = out.e12
            d2psi[b, a] = out.e12

    # normal projector of the constraint inside the ambient metric
    M = Dpsi.T @ Ga @ Dpsi
    Pi_T = Dpsi @ np.linalg.solve(M, Dpsi.T @ Ga)
    Pi_N = np.eye(dim_a) - Pi_T

    # a tangent vector of the constraint with kernel part a and P-part u
    # carries the induced arrow-component ydot = D(alpha) u in the ambient
    eyeP = np.eye(nP)
    Jalpha = np.stack([A.alpha_chart(p.patch_id, hd.seed(p.coords, eyeP[i]),
                                     y_pt.patch_id).e1 for i in range(nP)],
                      axis=1)

    def embed_input(w):
        return np.concatenate([w[:k], Jalpha @ w[k:], w[k:]])

    va, wa = embed_input(vhat), embed_input(what)
    for nameo, vec in (("v", va), ("w", wa)):
        res = np.linalg.norm(Pi_N @ vec) / max(np.linalg.norm(vec), 1e-30)
        if res > 1e-8:
            raise ConstraintViolationError(
                f"{nameo} is not tangent to the constraint (residual {res:.2e})")
    av = np.linalg.lstsq(Dpsi, va, rcond=None)[0]
    aw = np.linalg.lstsq(Dpsi, wa, rcond=None)[0]
    nabla = np.einsum("a,b,abz->z", av, aw, d2psi) + np.einsum(
        "zuv,u,v->z", Gamma_a, Dpsi @ av, Dpsi @ aw)
    return Pi_N @ nabla


@dataclass(frozen=True)
class GroupoidRhs:
    term_base: float
    term_arrow: float       # eps^3 K_eta1(Sh x, Sh y), unnormalized
    term_a: float
    term_ii_mixed: float    # |II(vhat, what)|^2
    term_ii_trace: float    # <II(vhat, vhat), II(what, what)>
    gram_deformed: float

    @property
    def total(self):
        return (self.term_base + self.term_arrow + self.term_a
                + self.term_ii_mixed - self.term_ii_trace)

    @property
    def sectional(self):
        return self.total / self.gram_deformed


def rhs_full_curvature(A: GroupoidActionData, eps, p: Point, v, w,
                       tol=DEFAULT_TOL) -> GroupoidRhs:
    """All five displayed terms of the groupoid curvature expression."""
    v, w = np.asarray(v, float), np.asarray(w, float)
    rep = hypothesis_check(A, tol=tol)
    if not rep["passed"]:
        raise HypothesisViolatedError("hypothesis fails; formula undefined")

    data = curvature_tensor(A.eta_P, p)
    term_base = float(np.einsum("abcd,a,b,c,d->", data.riemann, v, w, w, v))

    _, _, x = split_groupoid(A, p, v)
    _, _, y = split_groupoid(A, p, w)
    Sh = groupoid_shape_tensor(A, p)

    # arrow-space curvature on the kernel plane (Sh x, Sh y)
    arrow_man = A.arrow_field.manifold
    if arrow_man.dim == A.k:
        unit = Point(next(iter(arrow_man.patches)), np.zeros(A.k))
        adata = curvature_tensor(A.arrow_field, unit)
        sx, sy = Sh @ x, Sh @ y
        term_arrow = eps ** 3 * float(
            np.einsum("abcd,a,b,c,d->", adata.riemann, sx, sy, sy, sx))
    else:
        raise NotImplementedError("arrow curvature beyond the group case")

    # A-tensor on the product total space, with groupoid lifts
    act = A.classical_action
    ctx = CheegerContext(act, t=eps, validate=False)
    sub = product_submersion(ctx)
    from .cheeger import unit_arrow_point
    q0 = unit_arrow_point(ctx, p)
    hv, hw = horizontal_lift(A, eps, p, v), horizontal_lift(A, eps, p, w)
    Arec = a_tensor(sub, q0, hv, hw, tol=tol)
    Ghat = np.asarray(hd.value(sub.total_field.matrix(q0.patch_id, q0.coords)))
    term_a = 3.0 * float(Arec.components @ Ghat @ Arec.components)

    ii_vw = second_fundamental_form(A, eps, p, hv, hw, tol) if A.groupoid \
        else np.zeros_like(hv)
    ii_vv = second_fundamental_form(A, eps, p, hv, hv, tol) if A.groupoid \
        else np.zeros_like(hv)
    ii_ww = second_fundamental_form(A, eps, p, hw, hw, tol) if A.groupoid \
        else np.zeros_like(hw)
    term_ii_mixed = float(ii_vw @ Ghat @ ii_vw)
    term_ii_trace = float(ii_vv @ Ghat @ ii_ww)

    eta_eps = groupoid_cheeger_metric(A, eps, check_hypothesis=False)
    Ge = eta_eps(p)
    civ = groupoid_cheeger_tensor(A, eps, p, v, inverse=True).components
    ciw = groupoid_cheeger_tensor(A, eps, p, w, inverse=True).components
    gram = float((civ @ Ge @ civ) * (ciw @ Ge @ ciw) - (civ @ Ge @ ciw) ** 2)
    return GroupoidRhs(term_base, term_arrow, term_a, term_ii_mixed,
                       term_ii_trace, gram)
