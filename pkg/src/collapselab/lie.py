"""Compact Lie group data: structure constants, bi-invariant inner products,
and concrete group operations for the registry groups (tori and SU(2)).

The su(2) basis is the quaternion frame e1, e2, e3 = i, j, k with
[e_i, e_j] = 2 e_k cyclically; Q defaults to the identity in this frame,
which is the round unit-sphere bi-invariant metric under the unit
quaternion model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CollapseLabError, DimensionMismatchError


@dataclass(frozen=True)
class LieGroupData:
    registry_id: str
    dim: int
    structure_constants: np.ndarray   # c[k, i, j] = c^k_{ij}
    Q: np.ndarray                     # bi-invariant inner product on the algebra
    period: float = 2 * np.pi         # torus coordinate period (ignored for su2)

    def __post_init__(self):
        validate_group(self)


class GroupValidationError(CollapseLabError):
    pass


def validate_group(G: LieGroupData, tol=1e-12):
    c, Q = G.structure_constants, G.Q
    n = G.dim
    if c.shape != (n, n, n) or Q.shape != (n, n):
        raise DimensionMismatchError("structure constants / Q shape mismatch")
    if np.max(np.abs(c + np.einsum("kij->kji", c))) > tol:
        raise GroupValidationError("structure constants not antisymmetric")
    # Jacobi: sum_cyc c^m_{il} c^l_{jk} = 0
    jac = (np.einsum("mil,ljk->mijk", c, c)
           + np.einsum("mjl,lki->mijk", c, c)
           + np.einsum("mkl,lij->mijk", c, c))
    if np.max(np.abs(jac)) > tol:
        raise GroupValidationError(f"Jacobi residual {np.max(np.abs(jac)):.2e}")
    w = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    if w[0] <= 0 or np.max(np.abs(Q - Q.T)) > tol:
        raise GroupValidationError("Q is not symmetric positive-definite")
    # ad-invariance: Q([x,y],z) + Q(y,[x,z]) = 0 on basis triples
    adq = np.einsum("kij,kl->ijl", c, Q)
    res = np.max(np.abs(adq + np.einsum("kil,kj->ijl", c, Q)))
    if res > tol:
        raise GroupValidationError(f"Q not ad-invariant, residual {res:.2e}")


@dataclass(frozen=True, eq=False)
class GroupElement:
    registry_id: str
    data: np.ndarray   # angles for tori; unit quaternion (w, x, y, z) for su2

    def __post_init__(self):
        if self.registry_id == "su2":
            if abs(np.linalg.norm(self.data) - 1.0) > 1e-12:
                raise GroupValidationError("SU(2) element is not a unit quaternion")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def torus_group(k: int, period: float = 2 * np.pi, Q=None) -> LieGroupData:
    Q = np.eye(k) if Q is None else np.asarray(Q, dtype=float)
    return LieGroupData(f"t{k}", k, np.zeros((k, k, k)), Q, period=float(period))


def su2_group(Q=None) -> LieGroupData:
    c = np.zeros((3, 3, 3))
    for (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[k, i, j] = 2.0
        c[k, j, i] = -2.0
    Q = np.eye(3) if Q is None else np.asarray(Q, dtype=float)
    return LieGroupData("su2", 3, c, Q)


# ---------------------------------------------------------------------------
# algebra operations
# ---------------------------------------------------------------------------

def _check_vec(G, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (G.dim,):
        raise DimensionMismatchError(f"algebra vector must have length {G.dim}")
    return x


def bracket(G: LieGroupData, x, y):
    """[x, y]^k = c^k_{ij} x^i y^j."""
    x, y = _check_vec(G, x), _check_vec(G, y)
    return np.einsum("kij,i,j->k", G.structure_constants, x, y)


def q_inner(G: LieGroupData, x, y) -> float:
    x, y = _check_vec(G, x), _check_vec(G, y)
    return float(x @ G.Q @ y)


def q_norm(G: LieGroupData, x) -> float:
    return float(np.sqrt(q_inner(G, x, x)))


def biinvariant_sec_term(G: LieGroupData, a, b) -> float:
    """Unnormalized bi-invariant curvature numerator (1/4)|[a,b]|_Q^2."""
    br = bracket(G, a, b)
    return 0.25 * q_inner(G, br, br)


# ---------------------------------------------------------------------------
# group operations
# ---------------------------------------------------------------------------

def _qmul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def identity(G: LieGroupData) -> GroupElement:
    if G.registry_id == "su2":
        return GroupElement("su2", np.array([1.0, 0.0, 0.0, 0.0]))
    return GroupElement(G.registry_id, np.zeros(G.dim))


def multiply(G: LieGroupData, a: GroupElement, b: GroupElement) -> GroupElement:
    if G.registry_id == "su2":
        q = _qmul(a.data, b.data)
        return GroupElement("su2", q / np.linalg.norm(q))
    h = G.period / 2.0
    ang = ((a.data + b.data + h) % G.period) - h
    return GroupElement(G.registry_id, ang)


def invert(G: LieGroupData, a: GroupElement) -> GroupElement:
    if G.registry_id == "su2":
        return GroupElement("su2", a.data * np.array([1.0, -1.0, -1.0, -1.0]))
    h = G.period / 2.0
    return GroupElement(G.registry_id, ((-a.data + h) % G.period) - h)


def exponentiate(G: LieGroupData, x) -> GroupElement:
    """exp: algebra -> group; exp(0) = identity."""
    x = _check_vec(G, x)
    if G.registry_id == "su2":
        # e_i are the imaginary units, so exp(x) = cos|x| + sin|x| x_hat
        r = np.linalg.norm(x)
        if r < 1e-300:
            return identity(G)
        return GroupElement("su2", np.concatenate([[np.cos(r)], np.sin(r) * x / r]))
    h = G.period / 2.0
    return GroupElement(G.registry_id, ((x + h) % G.period) - h)
