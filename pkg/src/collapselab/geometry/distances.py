"""Graph geodesics, diameters and Monte-Carlo volumes for metric fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial import cKDTree

from ..config import DEFAULT_TOL
from ..errors import DisconnectedGraphError
from .manifolds import Point, SampleSet
from .metric import MetricField
from ..gh import FiniteMetricSpace


def edge_length(field: MetricField, p: Point, q: Point):
    """Chart-segment length with midpoint metric, or None without a common chart."""
    seg = field.manifold.displacement(p, q)
    if seg is None:
        return None
    pid, xa, xb = seg
    d = xb - xa
    g = np.asarray(field.matrix(pid, 0.5 * (xa + xb)), dtype=float)
    val = float(d @ g @ d)
    return float(np.sqrt(max(val, 0.0)))


def build_geodesic_graph(field: MetricField, points, k_neighbors: int,
                         pool_factor: int = 4):
    """Symmetric k-NN graph with metric edge lengths.

    Neighbor candidates come from the embedding (cheap), but the k kept per
    point are those with the smallest *metric* edge length, which matters
    for strongly anisotropic (collapsing) metrics where embedding-nearest
    and metric-nearest disagree.
    """
    emb = np.array([field.manifold.embed_point(p) for p in points])
    n = len(points)
    pool = min(max(k_neighbors + 1, pool_factor * k_neighbors + 1), n)
    _, idx = cKDTree(emb).query(emb, k=pool)
    lengths = {}

    def elen(i, j):
        key = (min(i, j), max(i, j))
        if key not in lengths:
            lengths[key] = edge_length(field, points[key[0]], points[key[1]])
        return lengths[key]

    rows, cols, vals = [], [], []
    kept = set()
    for i in range(n):
        cand = []
        for j in idx[i][1:]:
            w = elen(i, int(j))
            if w is not None:
                cand.append((w, int(j)))
        cand.sort()
        for w, j in cand[:k_neighbors]:
            key = (min(i, j), max(i, j))
            if key in kept:
                continue
            kept.add(key)
            rows.append(key[0])
            cols.append(key[1])
            vals.append(w)
    W = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return W + W.T


def geodesic_distances(field: MetricField, samples: SampleSet, k_neighbors: int,
                       tol=DEFAULT_TOL) -> FiniteMetricSpace:
    """Shortest-path distances on the k-NN metric graph of the samples."""
    points = list(samples.points)
    W = build_geodesic_graph(field, points, k_neighbors)
    ncomp, _ = connected_components(W, directed=False)
    if ncomp != 1:
        raise DisconnectedGraphError(
            f"sample graph has {ncomp} components; increase k_neighbors or samples")
    D = shortest_path(W, method="D", directed=False)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return FiniteMetricSpace(D, points=tuple(points))


def diameter_estimate(space: FiniteMetricSpace) -> float:
    return float(np.max(space.distances))


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    n_samples: int

    @property
    def relative_error(self):
        return self.stderr / self.value if self.value else np.inf


def volume_estimate(field: MetricField, n: int = 20000, seed: int = 0) -> VolumeEstimate:
    """Monte-Carlo integral of sqrt(det g) over the chart boxes.

    Charts carry declared weights partitioning the manifold (up to measure
    zero), so overlapping atlases are not double counted.
    """
    man = field.manifold
    total, var = 0.0, 0.0
    n_used = 0
    for pid, xs, boxvol in man.box_sample(n, seed):
        vals = np.empty(len(xs))
        for i, x in enumerate(xs):
            w = man.patch_weight(pid, x)
            if w == 0.0:
                vals[i] = 0.0
                continue
            g = np.asarray(field.matrix(pid, x), dtype=float)
            det = np.linalg.det(g)
            vals[i] = w * np.sqrt(max(det, 0.0))
        m = len(xs)
        total += boxvol * float(np.mean(vals))
        var += (boxvol ** 2) * float(np.var(vals)) / m
        n_used += m
    return VolumeEstimate(total, float(np.sqrt(var)), n_used)
