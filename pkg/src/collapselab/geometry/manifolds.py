"""Built-in manifolds as finite atlases of open boxes.

Each manifold knows its chart boxes, an embedding into Euclidean space
(used for neighbor queries, transitions and sampling), the chart inverse,
and the Jacobian of the chart map along the embedded surface.  Chart and
embedding maps accept hyper-dual coordinates so that everything downstream
can be differentiated.

Built-ins: flat tori T^k (single periodic chart), round spheres S^2 and
S^3 (two stereographic charts from opposite poles), a single-chart Hopf
coordinate patch on S^3, the Poincare disk, and products of a torus chart
with any of these (used for group x manifold total spaces).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import PointOutsidePatchError
from . import hyperdual as hd


@dataclass(frozen=True)
class Patch:
    pid: str
    low: np.ndarray
    high: np.ndarray


@dataclass(frozen=True, eq=False)
class Point:
    """A chart point: patch identifier plus coordinates in the open box."""
    patch_id: str
    coords: np.ndarray


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: Point
    components: np.ndarray

    def __post_init__(self):
        if len(self.components) != len(self.base.coords):
            from ..errors import DimensionMismatchError
            raise DimensionMismatchError(
                "tangent components must match base coordinate length")


@dataclass(frozen=True)
class SampleSet:
    points: tuple
    seed: int
    scheme: str


class Manifold:
    """Base class: a named atlas with an embedding."""

    name: str
    dim: int
    embed_dim: int

    def __init__(self):
        self.patches: dict[str, Patch] = {}

    # ---- chart bookkeeping -------------------------------------------------

    def _box(self, pid):
        return self.patches[pid]

    def contains(self, pid, coords) -> bool:
        p = self._box(pid)
        c = np.asarray(coords, dtype=float)
        return bool(np.all(c > p.low) and np.all(c < p.high))

    def point(self, pid, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        if pid not in self.patches:
            raise PointOutsidePatchError(f"unknown patch {pid!r} on {self.name}")
        coords = self.canonical(pid, coords)
        if not self.contains(pid, coords):
            raise PointOutsidePatchError(
                f"coords {coords} outside open box of patch {pid!r} on {self.name}")
        return Point(pid, coords)

    def canonical(self, pid, coords):
        """Canonical representative of the coordinates (wraps periodic axes)."""
        return np.asarray(coords, dtype=float)

    def boundary_margin(self, pid, coords) -> float:
        p = self._box(pid)
        c = np.asarray(coords, dtype=float)
        return float(min(np.min(c - p.low), np.min(p.high - c)))

    def box_volume(self, pid) -> float:
        p = self._box(pid)
        return float(np.prod(p.high - p.low))

    # ---- embedding ----------------------------------------------------------

    def embed(self, pid, x):
        raise NotImplementedError

    def chart(self, pid, emb):
        """Invert the embedding into patch ``pid`` (generic where rational)."""
        raise NotImplementedError

    def chart_jacobian(self, pid, x):
        """d(chart)/d(ambient) evaluated along the surface at embed(pid, x)."""
        raise NotImplementedError

    def embed_point(self, p: Point):
        return np.asarray(self.embed(p.patch_id, p.coords), dtype=float)

    def locate(self, emb) -> Point:
        """Best patch for an embedded point: maximal distance to the box faces."""
        best = None
        for pid in self.patches:
            c = self._try_chart(pid, emb)
            if c is None:
                continue
            m = self.boundary_margin(pid, c)
            if m <= 0:
                continue
            if best is None or m > best[1]:
                best = ((pid, c), m)
        if best is None:
            raise PointOutsidePatchError(f"embedded point not in any chart of {self.name}")
        pid, c = best[0]
        return Point(pid, c)

    def _try_chart(self, pid, emb):
        try:
            c = np.asarray(self.chart(pid, np.asarray(emb, dtype=float)), dtype=float)
        except (ZeroDivisionError, FloatingPointError, ValueError):
            return None
        if not np.all(np.isfinite(c)):
            return None
        return self.canonical(pid, c)

    def to_patch(self, p: Point, pid: str) -> Optional[Point]:
        if p.patch_id == pid:
            return p
        c = self._try_chart(pid, self.embed_point(p))
        if c is None or not self.contains(pid, c):
            return None
        return Point(pid, c)

    # ---- graph glue ----------------------------------------------------------

    def displacement(self, p: Point, q: Point):
        """Common-chart segment (pid, xa, xb) between two points, or None."""
        for pid in (p.patch_id, q.patch_id):
            pa, qa = self.to_patch(p, pid), self.to_patch(q, pid)
            if pa is not None and qa is not None:
                return pid, pa.coords, qa.coords
        return None

    # ---- sampling --------------------------------------------------------------

    def sample(self, n, seed, scheme="embedded-rejection") -> SampleSet:
        raise NotImplementedError

    def box_sample(self, n, seed):
        """Uniform draws inside every chart box: list of (pid, coords, box_volume)."""
        rng = np.random.default_rng(seed)
        out = []
        pids = sorted(self.patches)
        per = max(1, n // len(pids))
        for pid in pids:
            p = self._box(pid)
            u = rng.random((per, self.dim))
            xs = p.low + u * (p.high - p.low)
            out.append((pid, xs, self.box_volume(pid)))
        return out

    def patch_weight(self, pid, x):
        """Weight of this chart in the volume partition (1 on its home region)."""
        return 1.0


class Torus(Manifold):
    """Flat k-torus with one periodic chart of the given period."""

    def __init__(self, dim, period=2 * np.pi, name=None):
        super().__init__()
        self.dim = dim
        self.period = float(period)
        self.embed_dim = 2 * dim
        self.name = name or f"t{dim}(L={self.period:g})"
        h = self.period / 2.0
        self.patches = {"t": Patch("t", np.full(dim, -h), np.full(dim, h))}
        self._r = self.period / (2 * np.pi)

    def canonical(self, pid, coords):
        c = np.asarray(coords, dtype=float)
        h = self.period / 2.0
        return ((c + h) % self.period) - h

    def contains(self, pid, coords):
        return bool(np.all(np.isfinite(np.asarray(coords, dtype=float))))

    def boundary_margin(self, pid, coords):
        return self.period  # periodic chart: no boundary

    def embed(self, pid, x):
        phi = [x[i] * (2 * np.pi / self.period) for i in range(self.dim)]
        parts = []
        for f in phi:
            parts.append(self._r * hd.cos(f))
            parts.append(self._r * hd.sin(f))
        return hd.stack(parts)

    def chart(self, pid, emb):
        emb = np.asarray(emb, dtype=float)
        ang = np.arctan2(emb[1::2], emb[0::2])
        return ang * (self.period / (2 * np.pi))

    def chart_jacobian(self, pid, x):
        rows = []
        for i in range(self.dim):
            f = x[i] * (2 * np.pi / self.period)
            row = [0.0] * self.embed_dim
            row[2 * i] = -hd.sin(f)
            row[2 * i + 1] = hd.cos(f)
            rows.append(hd.stack(row))
        return hd.stack(rows)

    def displacement(self, p, q):
        d = q.coords - p.coords
        h = self.period / 2.0
        d = ((d + h) % self.period) - h
        return "t", p.coords, p.coords + d

    def sample(self, n, seed, scheme="uniform-box"):
        if scheme == "grid":
            m = int(np.ceil(n ** (1 / self.dim)))
            axes = [np.linspace(-self.period / 2, self.period / 2, m, endpoint=False)
                    + self.period / (2 * m) for _ in range(self.dim)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            pts = tuple(Point("t", g) for g in grid[:n])
            return SampleSet(pts, seed, "grid")
        rng = np.random.default_rng(seed)
        xs = (rng.random((n, self.dim)) - 0.5) * self.period
        return SampleSet(tuple(Point("t", x) for x in xs), seed, "uniform-box")


class Sphere(Manifold):
    """Round S^2 or S^3 of given radius, two stereographic charts.

    Embedding convention: the pole axis is the first ambient coordinate.
    Chart 'n' is centered at (+r, 0, ...), chart 's' at (-r, 0, ...); each
    covers everything but its antipodal pole, with home region |u| <= 1
    (a closed hemisphere) used as the volume weight.
    """

    BOX = 1.6

    def __init__(self, dim, radius=1.0, name=None):
        super().__init__()
        assert dim in (2, 3)
        self.dim = dim
        self.radius = float(radius)
        self.embed_dim = dim + 1
        self.name = name or f"s{dim}(r={self.radius:g})"
        b = np.full(dim, self.BOX)
        self.patches = {"n": Patch("n", -b, b), "s": Patch("s", -b, b)}

    def _sign(self, pid):
        return 1.0 if pid == "n" else -1.0

    def embed(self, pid, x):
        s = self._sign(pid)
        r2 = hd.dot(x, x)
        den = (1.0 + r2) ** -1.0
        first = s * self.radius * (1.0 - r2) * den
        rest = [(2.0 * self.radius) * x[i] * den for i in range(self.dim)]
        return hd.stack([first] + rest)

    def chart(self, pid, emb):
        s = self._sign(pid)
        den = self.radius + s * emb[0]
        return hd.stack([emb[i + 1] / den for i in range(self.dim)])

    def chart_jacobian(self, pid, x):
        s = self._sign(pid)
        r2 = hd.dot(x, x)
        scale = (1.0 + r2) / (2.0 * self.radius)
        rows = []
        for i in range(self.dim):
            row = [(-s) * x[i] * scale]
            for j in range(self.dim):
                row.append(scale if i == j else 0.0 * scale)
            rows.append(hd.stack(row))
        return hd.stack(rows)

    def patch_weight(self, pid, x):
        return 1.0 if float(hd.value(hd.dot(x, x))) < 1.0 else 0.0

    def sample(self, n, seed, scheme="embedded-rejection"):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n, self.embed_dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts = tuple(self.locate(self.radius * v) for v in g)
        return SampleSet(pts, seed, "embedded-rejection")


class HopfChartS3(Manifold):
    """Single Hopf-coordinate chart (eta, theta1, theta2) on round S^3.

    Embeds as (cos(eta) e^{i theta1}, sin(eta) e^{i theta2}) in C^2 = R^4,
    matching the stereographic S^3 ambient ordering.  The chart avoids the
    two coordinate circles, so it does not cover S^3; it exists for
    closed-form cross-checks (the Berger family is diagonal here).
    """

    def __init__(self, radius=1.0, eta_margin=0.15):
        super().__init__()
        self.dim = 3
        self.radius = float(radius)
        self.embed_dim = 4
        self.name = f"s3-hopf(r={self.radius:g})"
        low = np.array([eta_margin, -np.pi, -np.pi])
        high = np.array([np.pi / 2 - eta_margin, np.pi, np.pi])
        self.patches = {"h": Patch("h", low, high)}

    def canonical(self, pid, coords):
        c = np.asarray(coords, dtype=float)
        out = c.copy()
        out[1:] = ((c[1:] + np.pi) % (2 * np.pi)) - np.pi
        return out

    def contains(self, pid, coords):
        p = self._box(pid)
        c = np.asarray(coords, dtype=float)
        return bool(p.low[0] < c[0] < p.high[0]) and bool(np.all(np.isfinite(c)))

    def boundary_margin(self, pid, coords):
        p = self._box(pid)
        c = np.asarray(coords, dtype=float)
        return float(min(c[0] - p.low[0], p.high[0] - c[0]))

    def embed(self, pid, x):
        eta, t1, t2 = x[0], x[1], x[2]
        return self.radius * hd.stack([
            hd.cos(eta) * hd.cos(t1), hd.cos(eta) * hd.sin(t1),
            hd.sin(eta) * hd.cos(t2), hd.sin(eta) * hd.sin(t2),
        ])

    def chart(self, pid, emb):
        emb = np.asarray(emb, dtype=float) / self.radius
        c = np.hypot(emb[0], emb[1])
        return np.array([np.arctan2(np.hypot(emb[2], emb[3]), c),
                         np.arctan2(emb[1], emb[0]),
                         np.arctan2(emb[3], emb[2])])

    def displacement(self, p, q):
        d = q.coords - p.coords
        d[1:] = ((d[1:] + np.pi) % (2 * np.pi)) - np.pi
        return "h", p.coords, p.coords + d

    def sample(self, n, seed, scheme="uniform-box"):
        rng = np.random.default_rng(seed)
        p = self._box("h")
        xs = p.low + rng.random((n, 3)) * (p.high - p.low)
        return SampleSet(tuple(Point("h", x) for x in xs), seed, "uniform-box")


class HyperbolicDisk(Manifold):
    """Poincare disk chart (curvature -1), restricted to a safe central box."""

    def __init__(self, box=0.6):
        super().__init__()
        self.dim = 2
        self.embed_dim = 2
        self.name = "h2-disk"
        b = np.full(2, box)
        self.patches = {"d": Patch("d", -b, b)}

    def embed(self, pid, x):
        return hd.stack([x[0], x[1]])

    def chart(self, pid, emb):
        return np.asarray(emb, dtype=float)

    def chart_jacobian(self, pid, x):
        return np.eye(2)

    def displacement(self, p, q):
        return "d", p.coords, q.coords

    def sample(self, n, seed, scheme="uniform-box"):
        rng = np.random.default_rng(seed)
        p = self._box("d")
        xs = p.low + rng.random((n, 2)) * (p.high - p.low)
        return SampleSet(tuple(Point("d", x) for x in xs), seed, "uniform-box")


class ProductManifold(Manifold):
    """Product of a torus chart (left factor) with another manifold."""

    SEP = "|"

    def __init__(self, left: Torus, right: Manifold, name=None):
        super().__init__()
        self.left, self.right = left, right
        self.dim = left.dim + right.dim
        self.embed_dim = left.embed_dim + right.embed_dim
        self.name = name or f"{left.name}x{right.name}"
        self.patches = {}
        for rp in right.patches.values():
            lp = left.patches["t"]
            pid = f"t{self.SEP}{rp.pid}"
            self.patches[pid] = Patch(pid, np.concatenate([lp.low, rp.low]),
                                      np.concatenate([lp.high, rp.high]))

    def split_pid(self, pid):
        return pid.split(self.SEP, 1)[1]

    def _parts(self, x):
        return x[: self.left.dim], x[self.left.dim:]

    def canonical(self, pid, coords):
        a, b = self._parts(np.asarray(coords, dtype=float))
        return np.concatenate([self.left.canonical("t", a),
                               self.right.canonical(self.split_pid(pid), b)])

    def contains(self, pid, coords):
        a, b = self._parts(np.asarray(coords, dtype=float))
        return self.left.contains("t", a) and self.right.contains(self.split_pid(pid), b)

    def boundary_margin(self, pid, coords):
        a, b = self._parts(np.asarray(coords, dtype=float))
        return min(self.left.boundary_margin("t", a),
                   self.right.boundary_margin(self.split_pid(pid), b))

    def embed(self, pid, x):
        a, b = x[: self.left.dim], x[self.left.dim:]
        ea = self.left.embed("t", a)
        eb = self.right.embed(self.split_pid(pid), b)
        return hd.stack([ea[i] for i in range(self.left.embed_dim)]
                        + [eb[i] for i in range(self.right.embed_dim)])

    def chart(self, pid, emb):
        emb = np.asarray(emb, dtype=float)
        a = self.left.chart("t", emb[: self.left.embed_dim])
        b = self.right.chart(self.split_pid(pid), emb[self.left.embed_dim:])
        return np.concatenate([a, b])

    def point_pair(self, p: Point):
        a, b = self._parts(p.coords)
        return Point("t", a), Point(self.split_pid(p.patch_id), b)

    def join(self, theta, right_point: Point) -> Point:
        pid = f"t{self.SEP}{right_point.patch_id}"
        return Point(pid, np.concatenate([self.left.canonical("t", theta),
                                          right_point.coords]))

    def displacement(self, p, q):
        pa, pb = self.point_pair(p)
        qa, qb = self.point_pair(q)
        da = self.left.displacement(pa, qa)
        db = self.right.displacement(pb, qb)
        if db is None:
            return None
        pid = f"t{self.SEP}{db[0]}"
        return (pid, np.concatenate([da[1], db[1]]), np.concatenate([da[2], db[2]]))

    def sample(self, n, seed, scheme="embedded-rejection"):
        ls = self.left.sample(n, seed + 1)
        rs = self.right.sample(n, seed + 2, scheme)
        pts = tuple(self.join(a.coords, b) for a, b in zip(ls.points, rs.points))
        return SampleSet(pts, seed, scheme)

    def patch_weight(self, pid, x):
        a, b = self._parts(np.asarray(x, dtype=float))
        return self.left.patch_weight("t", a) * self.right.patch_weight(self.split_pid(pid), b)


class RawChart(Manifold):
    """A single unbounded chart with identity embedding.

    Scaffolding for ad-hoc coordinate computations (e.g. ambient metrics on
    constraint parametrizations) that want to reuse the curvature engine.
    """

    def __init__(self, dim, name="raw", half_width=1e6):
        super().__init__()
        self.dim = dim
        self.embed_dim = dim
        self.name = name
        b = np.full(dim, float(half_width))
        self.patches = {"r": Patch("r", -b, b)}

    def embed(self, pid, x):
        return x

    def chart(self, pid, emb):
        return np.asarray(emb, dtype=float)

    def chart_jacobian(self, pid, x):
        return np.eye(self.dim)

    def displacement(self, p, q):
        return "r", p.coords, q.coords
