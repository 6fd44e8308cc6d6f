"""Finite metric spaces: epsilon-nets, approximation witnesses, and
Gromov-Hausdorff bounds.

``gh_upper_bound`` certifies d_GH(X, Y) < 2*eps + delta by exhibiting
paired eps-nets with pairwise-distance distortion delta (a constructive
witness that is re-verified, never trusted).  ``gh_brute_force`` computes
the exact distance for tiny spaces by reducing correspondences to pairs of
functions (every correspondence contains the union of a function graph
each way, and distortion is monotone under inclusion), which serves as the
soundness oracle for the search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL
from .errors import DimensionMismatchError, SizeTooLargeError


@dataclass(frozen=True)
class FiniteMetricSpace:
    distances: np.ndarray
    points: tuple = None     # optional back-references to manifold points

    @property
    def size(self):
        return self.distances.shape[0]

    def diameter(self):
        return float(np.max(self.distances))


@dataclass(frozen=True)
class MetricCheck:
    passed: bool
    kind: str = "ok"
    violation: tuple = ()
    value: float = 0.0


def validate_metric(D, tol=DEFAULT_TOL) -> MetricCheck:
    """Check metric-space axioms; on failure report the first violating tuple."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        return MetricCheck(False, "not-square", (), 0.0)
    n = D.shape[0]
    bad = np.argmax(np.abs(np.diag(D)))
    if abs(D[bad, bad]) > 0:
        return MetricCheck(False, "diagonal", (int(bad),), float(D[bad, bad]))
    asym = np.abs(D - D.T)
    if np.max(asym) > tol.distance_symmetry:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        return MetricCheck(False, "symmetry", (int(i), int(j)), float(asym[i, j]))
    if np.min(D) < 0:
        i, j = np.unravel_index(np.argmin(D), D.shape)
        return MetricCheck(False, "negativity", (int(i), int(j)), float(D[i, j]))
    for i in range(n):
        excess = D[i][None, :] - D[i][:, None] - D
        m = float(np.max(excess))
        if m > tol.triangle_slack:
            j, k = np.unravel_index(np.argmax(excess), excess.shape)
            return MetricCheck(False, "triangle", (int(i), int(j), int(k)), m)
    return MetricCheck(True)


@dataclass(frozen=True)
class NetWitness:
    indices: tuple
    epsilon: float

    def covering_radius(self, D):
        return float(np.max(np.min(np.asarray(D)[:, list(self.indices)], axis=1)))

    def verify(self, D) -> bool:
        return self.covering_radius(D) <= self.epsilon


def epsilon_net(D, eps) -> NetWitness:
    """Greedy farthest-point net; covering verified exactly on return."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    D = np.asarray(D, dtype=float)
    chosen = [0]
    dist = D[0].copy()
    while float(np.max(dist)) > eps:
        j = int(np.argmax(dist))
        chosen.append(j)
        dist = np.minimum(dist, D[j])
    w = NetWitness(tuple(chosen), float(eps))
    assert w.verify(D)
    return w


def pair_distortion(DX, DY, xs, ys) -> float:
    """Exact max over i, j of |d_X(x_i, x_j) - d_Y(y_i, y_j)|."""
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        raise DimensionMismatchError("paired index lists must have equal length")
    DX, DY = np.asarray(DX, float), np.asarray(DY, float)
    return float(np.max(np.abs(DX[np.ix_(xs, xs)] - DY[np.ix_(ys, ys)])))


@dataclass(frozen=True)
class ApproximationWitness:
    xs: tuple
    ys: tuple
    epsilon: float
    delta: float

    def verify(self, DX, DY, tol=1e-12) -> bool:
        nx = NetWitness(tuple(sorted(set(self.xs))), self.epsilon)
        ny = NetWitness(tuple(sorted(set(self.ys))), self.epsilon)
        if not (nx.verify(DX) and ny.verify(DY)):
            return False
        return pair_distortion(DX, DY, self.xs, self.ys) <= self.delta + tol


@dataclass(frozen=True)
class GHBound:
    bound: float
    witness: ApproximationWitness
    restarts: int
    accepted_moves: int


def _fps_order(D, upto):
    """Farthest-point ordering of a finite space, starting at index 0."""
    n = D.shape[0]
    order = [0]
    dist = D[0].copy()
    while len(order) < min(upto, n):
        j = int(np.argmax(dist))
        order.append(j)
        dist = np.minimum(dist, D[j])
    return order


def _greedy_assignment(DXs, DY, x_order):
    """Assign to each x (in farthest-point order) the y of least incremental
    max-distortion; assignments may repeat y's."""
    m = DXs.shape[0]
    ys = np.full(m, -1, dtype=int)
    for step, i in enumerate(x_order):
        if step == 0:
            ys[i] = 0
            continue
        placed = np.flatnonzero(ys >= 0)
        # cost[y] = max_j |d_X(x_i, x_j) - d_Y(y, ys_j)| over placed j
        cost = np.max(np.abs(DXs[i, placed][None, :] - DY[:, ys[placed]]), axis=1)
        ys[i] = int(np.argmin(cost))
    return ys


def _force_net_coverage(DXs, DY, ys, net_needed):
    """Reassign slots so every required y-net index appears in ys."""
    for y_star in net_needed:
        if y_star in ys:
            continue
        cost = np.max(np.abs(DXs - DY[y_star][ys][None, :]), axis=1)
        # prefer slots whose y is used more than once or not itself required
        counts = {}
        for y in ys:
            counts[y] = counts.get(y, 0) + 1
        order = np.argsort(cost)
        for i in order:
            y_old = ys[int(i)]
            if y_old in net_needed and counts[y_old] <= 1:
                continue
            counts[y_old] -= 1
            ys[int(i)] = y_star
            counts[y_star] = counts.get(y_star, 0) + 1
            break
    return ys


def gh_upper_bound(DX, DY, eps, budget=4000, seed=0, restarts=2,
                   cooling=0.9995) -> GHBound:
    """Upper bound 2*eps + delta via paired eps-nets.

    The x-list is the eps-net of X (padded along the farthest-point order
    when Y needs more slots); each slot is assigned a point of Y freely
    (repeats allowed), subject to the y-list containing an eps-net of Y.
    Greedy nearest-distortion assignment seeded by farthest-point orderings
    is refined by annealed reassignments and transpositions plus targeted
    descent on the current worst pair.  Deterministic given the seed, and
    the returned delta is nonincreasing in the budget (best-so-far on one
    proposal stream).
    """
    DX, DY = np.asarray(DX, float), np.asarray(DY, float)
    nY = DY.shape[0]
    netX = list(epsilon_net(DX, eps).indices)
    netY = set(epsilon_net(DY, eps).indices)
    m = max(len(netX), len(netY))
    if len(netX) < m:
        fps = _fps_order(DX, m)
        xs = netX + [i for i in fps if i not in set(netX)]
        xs = (xs + netX)[:m]
    else:
        xs = netX
    xs = np.array(xs[:m])
    DXs = DX[np.ix_(xs, xs)]
    scale = max(DX.max(), DY.max(), 1e-30)
    rng = np.random.default_rng(seed)

    def energy(ys):
        return float(np.max(np.abs(DXs - DY[np.ix_(ys, ys)])))

    best_ys, best_e = None, np.inf
    accepted = 0
    for r in range(restarts):
        order = _fps_order(DXs, m) if r == 0 else list(rng.permutation(m))
        ys = _greedy_assignment(DXs, DY, order)
        ys = _force_net_coverage(DXs, DY, ys, netY)
        e = energy(ys)
        if e < best_e:
            best_ys, best_e = ys.copy(), e

        cur, cur_e = ys.copy(), e
        T = 0.2 * scale
        for step in range(budget):
            T = max(T * cooling, 1e-4 * scale)
            kind = step % 4
            cand = cur.copy()
            if kind == 3:
                # targeted descent: reassign one endpoint of the worst pair
                flat = int(np.argmax(np.abs(DXs - DY[np.ix_(cur, cur)])))
                i = flat // m if rng.random() < 0.5 else flat % m
                mask = np.arange(m) != i
                cost = np.max(np.abs(DXs[i, mask][None, :] - DY[:, cur[mask]]),
                              axis=1)
                cand[i] = int(np.argmin(cost))
            elif kind == 2:
                i, j = rng.integers(0, m, size=2)
                cand[i], cand[j] = cand[j], cand[i]
            else:
                i = int(rng.integers(0, m))
                cand[i] = int(rng.integers(0, nY))
            if not netY.issubset(set(cand.tolist())):
                continue
            ce = energy(cand)
            if ce <= cur_e or rng.random() < np.exp(-(ce - cur_e) / T):
                cur, cur_e = cand, ce
                accepted += 1
                if ce < best_e:
                    best_ys, best_e = cand.copy(), ce

    ys = tuple(int(y) for y in best_ys)
    witness = ApproximationWitness(tuple(int(x) for x in xs), ys, float(eps),
                                   float(best_e))
    assert witness.verify(DX, DY)
    return GHBound(2 * eps + best_e, witness, restarts, accepted)


def _all_functions(n_from, n_to):
    return np.array(list(itertools.product(range(n_to), repeat=n_from)), dtype=int)


def gh_brute_force(DX, DY, max_size=6) -> float:
    """Exact d_GH for tiny spaces.

    Minimizes distortion over correspondences R(f, g) = graph(f) u graph(g)^T;
    this is exhaustive because every correspondence contains such a union and
    distortion only drops on subsets.
    """
    DX, DY = np.asarray(DX, float), np.asarray(DY, float)
    nx, ny = DX.shape[0], DY.shape[0]
    if nx > max_size or ny > max_size:
        raise SizeTooLargeError(f"brute force limited to {max_size} points per space")
    F = _all_functions(nx, ny)
    G = _all_functions(ny, nx)
    disF = np.max(np.abs(DX[None, :, :] - DY[F[:, :, None], F[:, None, :]]), axis=(1, 2))
    disG = np.max(np.abs(DY[None, :, :] - DX[G[:, :, None], G[:, None, :]]), axis=(1, 2))

    orderF = np.argsort(disF)
    best = np.inf
    g_order = np.argsort(disG)
    G_sorted, disG_sorted = G[g_order], disG[g_order]
    for fi in orderF:
        df = disF[fi]
        if df >= best:
            break
        f = F[fi]
        # cross pairs: |d_X(x, g(y)) - d_Y(f(x), y)|
        mask = disG_sorted < best
        if not np.any(mask):
            break
        Gm, dGm = G_sorted[mask], disG_sorted[mask]
        DYf = DY[f[:, None], np.arange(ny)[None, :]]          # (nx, ny)
        chunk = 4096
        for s in range(0, Gm.shape[0], chunk):
            Gc = Gm[s:s + chunk]
            cross = np.max(np.abs(DX[:, Gc].transpose(1, 0, 2) - DYf[None]),
                           axis=(1, 2))
            tot = np.maximum(df, np.maximum(dGm[s:s + chunk], cross))
            m = float(np.min(tot))
            if m < best:
                best = m
    return 0.5 * best


def find_epsilon_approximation(DX, DY, eps, max_size=5):
    """Exhaustively search a (eps, eps)-approximation witness (tiny spaces)."""
    DX, DY = np.asarray(DX, float), np.asarray(DY, float)
    nx, ny = DX.shape[0], DY.shape[0]
    if nx > max_size or ny > max_size:
        raise SizeTooLargeError("exhaustive witness search limited to tiny spaces")
    for m in range(1, min(nx, ny) + 1):
        for xs in itertools.combinations(range(nx), m):
            if NetWitness(xs, eps).covering_radius(DX) > eps:
                continue
            for ys in itertools.permutations(range(ny), m):
                if NetWitness(tuple(sorted(ys)), eps).covering_radius(DY) > eps:
                    continue
                if pair_distortion(DX, DY, xs, ys) < eps:
                    return ApproximationWitness(xs, ys, eps, eps)
    return None


def quotient_sample(model, n, seed, leaf_samples=18, k_neighbors=12,
                    oversample=6):
    """Finite approximation of the leaf space with its quotient metric.

    Chooses n leaves (farthest-point spread), samples each leaf along the
    group sweep, sets d(L_a, L_b) = min ambient graph distance over leaf
    sample pairs, and repairs triangle violations by metric closure.
    """
    from .action import orbit_sample
    from .geometry.distances import build_geodesic_graph
    from scipy.sparse.csgraph import connected_components, shortest_path
    from .errors import DisconnectedGraphError

    if getattr(model, "single_leaf", False):
        return FiniteMetricSpace(np.zeros((1, 1)))
    action = getattr(model, "action", None) or getattr(model, "source_action", None)
    if action is None:
        raise ValueError("quotient sampling needs an orbit-sampleable model")
    field = model.base_field
    man = field.manifold

    cands = man.sample(oversample * n, seed).points
    emb = np.array([man.embed_point(p) for p in cands])
    reps = [0]
    dist = np.linalg.norm(emb - emb[0], axis=1)
    while len(reps) < n:
        j = int(np.argmax(dist))
        reps.append(j)
        dist = np.minimum(dist, np.linalg.norm(emb - emb[j], axis=1))
    leaves = [cands[i] for i in reps]

    pool, owner = [], []
    for a, rep in enumerate(leaves):
        for q in orbit_sample(action, rep, leaf_samples, seed=seed + a):
            pool.append(q)
            owner.append(a)
    owner = np.array(owner)

    W = build_geodesic_graph(field, pool, k_neighbors)
    ncomp, _ = connected_components(W, directed=False)
    if ncomp != 1:
        raise DisconnectedGraphError("leaf sampling produced a disconnected graph")
    DP = shortest_path(W, method="D", directed=False)

    D = np.zeros((n, n))
    for a in range(n):
        ia = owner == a
        for b in range(a + 1, n):
            d = float(np.min(DP[np.ix_(ia, owner == b)]))
            D[a, b] = D[b, a] = d
    # metric closure over the leaf graph
    D = shortest_path(D, method="FW", directed=False)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    out = FiniteMetricSpace(D, points=tuple(leaves))
    assert validate_metric(D).passed
    return out
