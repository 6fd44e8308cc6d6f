"""Metric fields: evaluators producing an SPD matrix at each chart point.

A :class:`MetricField` wraps a generic evaluator ``fn(patch_id, coords)``
that must accept plain float coordinates or hyper-dual coordinates and
return the metric matrix in the same arithmetic.  Every deformation in the
package produces and consumes these fields, so curvature of a deformed
metric is computed by pushing hyper-duals through the whole composition.
"""

from __future__ import annotations

import numpy as np

from ..config import DEFAULT_TOL
from ..errors import NonSPDMetricError, PointOutsidePatchError
from . import hyperdual as hd
from .manifolds import HopfChartS3, HyperbolicDisk, Manifold, Point, Sphere, Torus


class MetricField:
    """Evaluator descriptor mapping chart points to SPD matrices."""

    def __init__(self, manifold: Manifold, fn, descriptor=None):
        self.manifold = manifold
        self.dim = manifold.dim
        self._fn = fn
        self.descriptor = descriptor or {"id": "anonymous"}

    def matrix(self, patch_id, coords):
        """Raw evaluation; ``coords`` may be float or hyper-dual."""
        return self._fn(patch_id, coords)

    def __call__(self, p: Point):
        return metric_eval(self, p)

    def with_descriptor(self, **kw):
        d = dict(self.descriptor)
        d.update(kw)
        return MetricField(self.manifold, self._fn, d)

    def __repr__(self):
        return f"MetricField({self.manifold.name}, {self.descriptor})"


def metric_eval(field: MetricField, p: Point, tol=DEFAULT_TOL):
    """Validated metric evaluation at a point.

    Raises PointOutsidePatchError if the point is not in its declared box and
    NonSPDMetricError if the evaluator returned a broken matrix (the usual
    symptom of a malformed deformation).
    """
    if not field.manifold.contains(p.patch_id, p.coords):
        raise PointOutsidePatchError(
            f"{p.coords} outside patch {p.patch_id!r} of {field.manifold.name}")
    g = np.asarray(hd.value(field.matrix(p.patch_id, p.coords)), dtype=float)
    sym_err = float(np.max(np.abs(g - g.T)))
    scale = max(1.0, float(np.max(np.abs(g))))
    if sym_err > tol.metric_symmetry * scale:
        raise NonSPDMetricError(f"metric asymmetric by {sym_err:.3e} at {p}")
    w = np.linalg.eigvalsh(0.5 * (g + g.T))
    if w[0] <= tol.spd_min_eig:
        raise NonSPDMetricError(f"metric not positive-definite (min eig {w[0]:.3e}) at {p}")
    return 0.5 * (g + g.T)


# ---------------------------------------------------------------------------
# built-in fields
# ---------------------------------------------------------------------------

def flat_metric(manifold: Torus) -> MetricField:
    n = manifold.dim
    eye = np.eye(n)

    def fn(pid, x):
        if isinstance(x, hd.HyperDual):
            # constant matrix, but keep dual structure so callers can mix
            return hd.HyperDual(eye.copy())
        return eye.copy()

    return MetricField(manifold, fn, {"id": "flat", "manifold": manifold.name})


def round_sphere_metric(manifold: Sphere) -> MetricField:
    r2c = 4.0 * manifold.radius ** 2
    n = manifold.dim
    eye = np.eye(n)

    def fn(pid, x):
        s = hd.dot(x, x)
        c = r2c * (1.0 + s) ** -2.0
        return c * eye

    return MetricField(manifold, fn,
                       {"id": "round-sphere", "radius": manifold.radius,
                        "manifold": manifold.name})


def hopf_chart_round_metric(manifold: HopfChartS3) -> MetricField:
    r2 = manifold.radius ** 2

    def fn(pid, x):
        eta = x[0]
        c2 = hd.cos(eta) ** 2.0
        s2 = hd.sin(eta) ** 2.0
        z = 0.0 * c2
        return r2 * hd.stack([
            hd.stack([1.0 + z, z, z]),
            hd.stack([z, c2, z]),
            hd.stack([z, z, s2]),
        ])

    return MetricField(manifold, fn, {"id": "hopf-chart-round", "radius": manifold.radius})


def berger_hopf_chart_metric(manifold: HopfChartS3, t: float) -> MetricField:
    """Cheeger-deformed round metric in Hopf coordinates, parameter t >= 0.

    The circle direction d/dtheta1 + d/dtheta2 has unit length in the round
    metric and is scaled down to 1/(1+t); normal directions are unchanged.
    Written diagonally-in-closed-form for use as an independent cross-check
    chart (fiber scale delta^2 = 1/(1+t)).
    """
    lam = t / (1.0 + t)

    def fn(pid, x):
        eta = x[0]
        c2 = hd.cos(eta) ** 2.0
        s2 = hd.sin(eta) ** 2.0
        z = 0.0 * c2
        # round part diag(1, c2, s2) minus lam * outer(w, w), w = (0, c2, s2)
        return hd.stack([
            hd.stack([1.0 + z, z, z]),
            hd.stack([z, c2 - lam * c2 * c2, -lam * c2 * s2]),
            hd.stack([z, -lam * c2 * s2, s2 - lam * s2 * s2]),
        ])

    return MetricField(manifold, fn, {"id": "berger-hopf-chart", "t": t})


def hyperbolic_metric(manifold: HyperbolicDisk) -> MetricField:
    eye = np.eye(2)

    def fn(pid, x):
        s = hd.dot(x, x)
        c = 4.0 * (1.0 - s) ** -2.0
        return c * eye

    return MetricField(manifold, fn, {"id": "hyperbolic-disk"})


def product_metric(manifold, left_matrix: np.ndarray, right_field: MetricField,
                   descriptor=None) -> MetricField:
    """Block metric (constant left block) + (right field) on a ProductManifold."""
    k = manifold.left.dim

    def fn(pid, x):
        rp = manifold.split_pid(pid)
        right = right_field.matrix(rp, x[k:])
        return hd.blockdiag([left_matrix, right])

    return MetricField(manifold, fn, descriptor or {"id": "product"})


# registry -------------------------------------------------------------------

def builtin_manifold(rid: str, **params) -> Manifold:
    if rid in ("t1", "t2", "t3", "t4"):
        return Torus(int(rid[1]), period=params.get("period", 2 * np.pi))
    if rid == "s2":
        return Sphere(2, radius=params.get("radius", 1.0))
    if rid == "s3":
        return Sphere(3, radius=params.get("radius", 1.0))
    if rid == "s3-hopf":
        return HopfChartS3(radius=params.get("radius", 1.0))
    if rid == "h2":
        return HyperbolicDisk()
    raise KeyError(f"unknown manifold registry id {rid!r}")


def builtin_metric(rid: str, **params) -> MetricField:
    """Construct a named base metric with its manifold."""
    if rid.startswith("t") and rid[1:].isdigit():
        return flat_metric(builtin_manifold(rid, **params))
    if rid in ("s2", "s3"):
        return round_sphere_metric(builtin_manifold(rid, **params))
    if rid == "s3-hopf":
        return hopf_chart_round_metric(builtin_manifold(rid, **params))
    if rid == "berger-hopf":
        return berger_hopf_chart_metric(builtin_manifold("s3-hopf", **{
            k: v for k, v in params.items() if k != "t"}), t=params.get("t", 1.0))
    if rid == "h2":
        return hyperbolic_metric(builtin_manifold(rid))
    raise KeyError(f"unknown metric registry id {rid!r}")
