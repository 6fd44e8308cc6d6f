"""Second-order differentiation engine: Christoffels, Riemann, sectional.

The default path pushes hyper-dual coordinates through the metric
evaluator, giving second derivatives that are exact to roundoff; a central
finite-difference path (one Richardson level) is kept as a fallback and
cross-check.  Conventions:

    Gamma[k,i,j]   = Gamma^k_{ij}
    R[a,b,c,d]     = g( R(e_a, e_b) e_c , e_d ),  R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
    K(v,w)         = g(R(v,w)w, v) / (|v|^2 |w|^2 - g(v,w)^2)

so the unit round sphere has K = +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_TOL
from ..errors import DegeneratePlaneError, PointOutsidePatchError
from . import hyperdual as hd
from .manifolds import Point, SampleSet, TangentVector
from .metric import MetricField


@dataclass(frozen=True)
class CurvatureData:
    point: Point
    g: np.ndarray
    ginv: np.ndarray
    christoffel: np.ndarray   # Gamma[k,i,j]
    riemann: np.ndarray       # R[a,b,c,d], fully covariant
    dg: np.ndarray            # dg[a,i,j] = d_a g_ij


@dataclass(frozen=True)
class CurvatureReport:
    entries: tuple            # (point, (v, w), K)
    min_K: float
    max_K: float
    parameter: float | None
    n_points: int
    planes_per_point: int
    seed: int

    @property
    def max_abs(self):
        return max(abs(self.min_K), abs(self.max_K))


def metric_second_derivatives(field: MetricField, p: Point, method="hyperdual",
                              tol=DEFAULT_TOL):
    """Return (g, dg, d2g) at a point: values, first and second derivatives."""
    n = field.dim
    x = p.coords
    if method == "hyperdual":
        g = None
        dg = np.zeros((n, n, n))
        d2g = np.zeros((n, n, n, n))
        eye = np.eye(n)
        for a in range(n):
            for b in range(a, n):
                out = field.matrix(p.patch_id, hd.seed_pair(x, eye[a], eye[b]))
                if g is None:
                    g = out.f.copy()
                    # fill first derivatives once per leading index
                dg[a] = out.e1
                dg[b] = out.e2
                d2g[a, b] = out.e12
                d2g[b, a] = out.e12
        return g, dg, d2g
    if method == "fd":
        return _metric_derivatives_fd(field, p, tol)
    raise ValueError(f"unknown differentiation method {method!r}")


def _metric_derivatives_fd(field: MetricField, p: Point, tol):
    n = field.dim
    h = tol.fd_step
    need = 4 * h if tol.fd_richardson else 2 * h
    if field.manifold.boundary_margin(p.patch_id, p.coords) <= need:
        raise PointOutsidePatchError(
            "finite-difference step exits the patch box; resample the point")

    def ev(dx):
        return np.asarray(hd.value(field.matrix(p.patch_id, p.coords + dx)), dtype=float)

    eye = np.eye(n)
    g = ev(np.zeros(n))

    def d1(a, step):
        return (ev(step * eye[a]) - ev(-step * eye[a])) / (2 * step)

    def d2_aa(a, step):
        return (ev(step * eye[a]) - 2 * g + ev(-step * eye[a])) / step ** 2

    def d2_ab(a, b, step):
        return (ev(step * (eye[a] + eye[b])) - ev(step * (eye[a] - eye[b]))
                - ev(step * (eye[b] - eye[a])) + ev(-step * (eye[a] + eye[b]))) / (4 * step ** 2)

    def rich(f):
        if not tol.fd_richardson:
            return f(h)
        return (4.0 * f(h) - f(2 * h)) / 3.0

    dg = np.stack([rich(lambda s, a=a: d1(a, s)) for a in range(n)])
    d2g = np.zeros((n, n, n, n))
    for a in range(n):
        for b in range(a, n):
            block = rich((lambda s, a=a: d2_aa(a, s)) if a == b
                         else (lambda s, a=a, b=b: d2_ab(a, b, s)))
            d2g[a, b] = block
            d2g[b, a] = block
    return g, dg, d2g


def christoffel_from_derivatives(g, dg):
    ginv = np.linalg.inv(g)
    T = (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg)
         - np.einsum("lij->ijl", dg))
    return 0.5 * np.einsum("kl,ijl->kij", ginv, T), ginv


def _whitened(field: MetricField, p: Point):
    """Pull the field back by a constant linear map making g(p) = Id.

    Strongly anisotropic deformations (collapsed blocks) make the raw chart
    computation lose digits through g^{-1}; whitening is exact (sectional
    curvature is invariant under the linear chart change) and keeps every
    solve well conditioned.  Returns (whitened field at y=0, L) with
    vectors transforming as v_chart = L v_white.
    """
    g0 = np.asarray(hd.value(field.matrix(p.patch_id, p.coords)), dtype=float)
    R = np.linalg.cholesky(0.5 * (g0 + g0.T)).T      # g0 = R^T R
    L = np.linalg.inv(R)
    x0 = p.coords

    def fn(pid, y):
        x = _affine(x0, L, y)
        return L.T @ field.matrix(pid, x) @ L

    wf = MetricField(field.manifold, fn, {"id": "whitened", "of": field.descriptor})
    return wf, L


def _affine(x0, L, y):
    if isinstance(y, hd.HyperDual):
        return hd.HyperDual(x0 + L @ y.f, L @ y.e1, L @ y.e2, L @ y.e12)
    return x0 + L @ np.asarray(y, dtype=float)


def curvature_tensor(field: MetricField, p: Point, method="hyperdual",
                     tol=DEFAULT_TOL, whiten=True) -> CurvatureData:
    """Fully covariant Riemann tensor and Christoffel symbols at a point.

    With whiten=True (default for the hyperdual path) the tensor is computed
    in a linearly transformed chart with g(p) = Id and mapped back, which is
    exact and numerically robust for collapsed metrics.
    """
    if whiten and method == "hyperdual":
        wf, L = _whitened(field, p)
        wp = Point(p.patch_id, np.zeros_like(p.coords))
        # evaluate in the whitened chart, then push indices back with L^-1
        g, dg, d2g = metric_second_derivatives(
            MetricField(field.manifold, lambda pid, y: wf.matrix(pid, y),
                        wf.descriptor), wp, method, tol)
        Gamma_w, _ = christoffel_from_derivatives(g, dg)
        data_w = _assemble(wp, g, dg, d2g, Gamma_w)
        Li = np.linalg.inv(L)
        # R_chart(va, vb, vc, vd) = R_white(L^-1 va, ...) componentwise
        Rw = data_w.riemann
        Rc = np.einsum("abcd,ae,bf,cg,dh->efgh", Rw, Li, Li, Li, Li)
        gc = Li.T @ data_w.g @ Li
        Gc = np.einsum("kij,km,ia,jb->mab", data_w.christoffel, L, Li, Li)
        # Gamma transforms affinely, but the second-derivative part vanishes
        # for a linear chart change, so the tensor rule above is exact
        dgc = np.einsum("aij,ak,im,jn->kmn", data_w.dg, Li, Li, Li)
        return CurvatureData(p, gc, np.linalg.inv(gc), Gc, Rc, dgc)

    g, dg, d2g = metric_second_derivatives(field, p, method, tol)
    Gamma, ginv = christoffel_from_derivatives(g, dg)

    return _assemble(p, g, dg, d2g, Gamma)


def _assemble(p, g, dg, d2g, Gamma):
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("km,aml,ln->akn", ginv, dg, ginv)
    dT = (np.einsum("aijl->aijl", d2g) + np.einsum("ajil->aijl", d2g)
          - np.einsum("alij->aijl", d2g))
    T = (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg)
         - np.einsum("lij->ijl", dg))
    dGamma = 0.5 * (np.einsum("akl,ijl->akij", dginv, T)
                    + np.einsum("kl,aijl->akij", ginv, dT))

    # (R(e_a, e_b) e_c)^d
    Rup = (np.einsum("adbc->dcab", dGamma) - np.einsum("bdac->dcab", dGamma)
           + np.einsum("dae,ebc->dcab", Gamma, Gamma)
           - np.einsum("dbe,eac->dcab", Gamma, Gamma))
    Rdown = np.einsum("dm,mcab->abcd", g, Rup)
    return CurvatureData(p, g, ginv, Gamma, Rdown, dg)


def riemann_symmetry_residuals(data: CurvatureData):
    """Relative residuals of the Riemann symmetries at a point."""
    R = data.riemann
    scale = max(float(np.max(np.abs(R))), 1e-30)
    antisym = float(np.max(np.abs(R + np.einsum("abcd->bacd", R)))) / scale
    pair = float(np.max(np.abs(R - np.einsum("abcd->cdab", R)))) / scale
    bianchi = float(np.max(np.abs(R + np.einsum("abcd->bcad", R)
                                  + np.einsum("abcd->cabd", R)))) / scale
    return {"antisymmetry": antisym, "pair": pair, "bianchi": bianchi, "scale": scale}


def sectional_from_data(data: CurvatureData, v, w, tol=DEFAULT_TOL):
    g = data.g
    nv = float(np.sqrt(v @ g @ v))
    nw = float(np.sqrt(w @ g @ w))
    if nv == 0.0 or nw == 0.0:
        raise DegeneratePlaneError("zero vector spans no plane")
    vn, wn = v / nv, w / nw
    gram_n = 1.0 - float(vn @ g @ wn) ** 2
    if gram_n <= tol.gram_min:
        raise DegeneratePlaneError(f"plane Gram determinant {gram_n:.3e} below cutoff")
    num = float(np.einsum("abcd,a,b,c,d->", data.riemann, v, w, w, v))
    gram = float((v @ g @ v) * (w @ g @ w) - (v @ g @ w) ** 2)
    return num / gram


def sectional_curvature(field: MetricField, p: Point, v, w, method="hyperdual",
                        tol=DEFAULT_TOL):
    """Sectional curvature of the plane span{v, w} at p."""
    if isinstance(v, TangentVector):
        v = v.components
    if isinstance(w, TangentVector):
        w = w.components
    data = curvature_tensor(field, p, method, tol)
    return sectional_from_data(data, np.asarray(v, float), np.asarray(w, float), tol)


def random_plane(rng, data: CurvatureData, tol=DEFAULT_TOL):
    for _ in range(tol.degenerate_plane_retries):
        v = rng.standard_normal(data.g.shape[0])
        w = rng.standard_normal(data.g.shape[0])
        try:
            k = sectional_from_data(data, v, w, tol)
        except DegeneratePlaneError:
            continue
        return v, w, k
    raise DegeneratePlaneError("could not draw a nondegenerate plane")


def curvature_scan(field: MetricField, samples: SampleSet, planes_per_point: int,
                   seed: int, parameter=None, method="hyperdual",
                   tol=DEFAULT_TOL) -> CurvatureReport:
    """Sectional-curvature extremes over samples x random planes."""
    rng = np.random.default_rng(seed)
    entries = []
    for p in samples.points:
        data = curvature_tensor(field, p, method, tol)
        for _ in range(planes_per_point):
            v, w, k = random_plane(rng, data, tol)
            entries.append((p, (v, w), k))
    ks = np.array([e[2] for e in entries])
    return CurvatureReport(tuple(entries), float(ks.min()), float(ks.max()),
                           parameter, len(samples.points), planes_per_point, seed)


def covariant_derivative(field: MetricField, p: Point, x_vec, y_field):
    """nabla_X Y at p for an analytic vector field y_field(pid, coords)."""
    x_vec = np.asarray(x_vec, dtype=float)
    g, dg, _ = None, None, None
    n = field.dim
    # directional derivative of Y along x via a first-order dual seed
    out = y_field(p.patch_id, hd.seed(p.coords, x_vec))
    dY = out.e1
    y0 = out.f
    gmat, dgall, _d2 = metric_second_derivatives(field, p)
    Gamma, _ = christoffel_from_derivatives(gmat, dgall)
    return dY + np.einsum("kab,a,b->k", Gamma, x_vec, y0)
