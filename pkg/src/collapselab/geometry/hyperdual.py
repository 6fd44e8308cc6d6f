"""Second-order forward-mode automatic differentiation with hyper-dual arrays.

A hyper-dual number carries a value part ``f`` and three perturbation parts
``e1``, ``e2``, ``e12`` representing

    x = f + e1*eps1 + e2*eps2 + e12*eps1*eps2,     eps1^2 = eps2^2 = 0.

Seeding eps1 along coordinate ``a`` and eps2 along coordinate ``b`` and
pushing the number through a smooth evaluator yields the exact first
derivatives (e1, e2) and the exact mixed second derivative (e12) of the
output, to roundoff.  All parts are numpy arrays, so whole matrices
propagate at once; ``solve`` extends the arithmetic through linear solves,
which is what lets deformed-metric evaluators (built from Gram solves and
projectors) be differentiated without finite differences.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "HyperDual", "seed", "seed_pair", "value", "sin", "cos", "exp", "log",
    "sqrt", "stack", "solve", "inv", "transpose", "dot", "blockdiag",
]


def _z(x):
    return np.zeros_like(np.asarray(x, dtype=float))


class HyperDual:
    """Array of hyper-dual numbers with numpy-like broadcasting."""

    __slots__ = ("f", "e1", "e2", "e12")
    __array_ufunc__ = None  # keep numpy from consuming us in mixed expressions

    def __init__(self, f, e1=None, e2=None, e12=None):
        self.f = np.asarray(f, dtype=float)
        self.e1 = _z(self.f) if e1 is None else np.asarray(e1, dtype=float)
        self.e2 = _z(self.f) if e2 is None else np.asarray(e2, dtype=float)
        self.e12 = _z(self.f) if e12 is None else np.asarray(e12, dtype=float)

    # -- basic structure ---------------------------------------------------

    @property
    def shape(self):
        return self.f.shape

    @property
    def T(self):
        return HyperDual(self.f.T, self.e1.T, self.e2.T, self.e12.T)

    def reshape(self, *s):
        return HyperDual(self.f.reshape(*s), self.e1.reshape(*s),
                         self.e2.reshape(*s), self.e12.reshape(*s))

    def __len__(self):
        return len(self.f)

    def __getitem__(self, idx):
        return HyperDual(self.f[idx], self.e1[idx], self.e2[idx], self.e12[idx])

    def __repr__(self):
        return f"HyperDual(f={self.f!r})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, o):
        o = _lift(o)
        return HyperDual(self.f + o.f, self.e1 + o.e1, self.e2 + o.e2,
                         self.e12 + o.e12)

    __radd__ = __add__

    def __neg__(self):
        return HyperDual(-self.f, -self.e1, -self.e2, -self.e12)

    def __sub__(self, o):
        return self + (-_lift(o))

    def __rsub__(self, o):
        return _lift(o) + (-self)

    def __mul__(self, o):
        o = _lift(o)
        return HyperDual(
            self.f * o.f,
            self.e1 * o.f + self.f * o.e1,
            self.e2 * o.f + self.f * o.e2,
            self.e12 * o.f + self.e1 * o.e2 + self.e2 * o.e1 + self.f * o.e12,
        )

    __rmul__ = __mul__

    def _recip(self):
        inv_f = 1.0 / self.f
        inv2 = inv_f * inv_f
        return HyperDual(
            inv_f,
            -self.e1 * inv2,
            -self.e2 * inv2,
            -self.e12 * inv2 + 2.0 * self.e1 * self.e2 * inv2 * inv_f,
        )

    def __truediv__(self, o):
        return self * _lift(o)._recip()

    def __rtruediv__(self, o):
        return _lift(o) * self._recip()

    def __pow__(self, p):
        if not np.isscalar(p):
            raise TypeError("hyper-dual powers support scalar exponents only")
        g = self.f ** p
        gp = p * self.f ** (p - 1)
        gpp = p * (p - 1) * self.f ** (p - 2)
        return self._chain(g, gp, gpp)

    def __matmul__(self, o):
        o = _lift(o)
        return HyperDual(
            self.f @ o.f,
            self.e1 @ o.f + self.f @ o.e1,
            self.e2 @ o.f + self.f @ o.e2,
            self.e12 @ o.f + self.e1 @ o.e2 + self.e2 @ o.e1 + self.f @ o.e12,
        )

    def __rmatmul__(self, o):
        return _lift(o).__matmul__(self)

    # value-part comparisons, used only to pick branches that are locally
    # constant in a neighbourhood of the evaluation point
    def __lt__(self, o): return self.f < _vf(o)
    def __le__(self, o): return self.f <= _vf(o)
    def __gt__(self, o): return self.f > _vf(o)
    def __ge__(self, o): return self.f >= _vf(o)

    def _chain(self, g, gp, gpp):
        """Apply a scalar function with value g, derivative gp, second gpp."""
        return HyperDual(
            g,
            gp * self.e1,
            gp * self.e2,
            gp * self.e12 + gpp * self.e1 * self.e2,
        )


def _lift(x):
    return x if isinstance(x, HyperDual) else HyperDual(np.asarray(x, dtype=float))


def _vf(x):
    return x.f if isinstance(x, HyperDual) else x


def value(x):
    """Value part of a hyper-dual (or pass a plain array through)."""
    return x.f if isinstance(x, HyperDual) else np.asarray(x, dtype=float)


def seed(x, direction):
    """First-order seed: d/ds of the input along ``direction``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    return HyperDual(x, e1=d)


def seed_pair(x, d1, d2):
    """Seed eps1 along d1 and eps2 along d2 for a mixed second derivative."""
    x = np.asarray(x, dtype=float)
    return HyperDual(x, e1=np.asarray(d1, dtype=float),
                     e2=np.asarray(d2, dtype=float))


# -- elementary functions ---------------------------------------------------

def sin(x):
    if isinstance(x, HyperDual):
        return x._chain(np.sin(x.f), np.cos(x.f), -np.sin(x.f))
    return np.sin(x)


def cos(x):
    if isinstance(x, HyperDual):
        return x._chain(np.cos(x.f), -np.sin(x.f), -np.cos(x.f))
    return np.cos(x)


def exp(x):
    if isinstance(x, HyperDual):
        g = np.exp(x.f)
        return x._chain(g, g, g)
    return np.exp(x)


def log(x):
    if isinstance(x, HyperDual):
        return x._chain(np.log(x.f), 1.0 / x.f, -1.0 / x.f ** 2)
    return np.log(x)


def sqrt(x):
    if isinstance(x, HyperDual):
        g = np.sqrt(x.f)
        return x._chain(g, 0.5 / g, -0.25 / g ** 3)
    return np.sqrt(x)


# -- array/matrix helpers ----------------------------------------------------

def stack(items, axis=0):
    """Stack a sequence of hyper-duals/arrays, promoting as needed."""
    if any(isinstance(v, HyperDual) for v in items):
        items = [_lift(v) for v in items]
        return HyperDual(
            np.stack([v.f for v in items], axis=axis),
            np.stack([v.e1 for v in items], axis=axis),
            np.stack([v.e2 for v in items], axis=axis),
            np.stack([v.e12 for v in items], axis=axis),
        )
    return np.stack(items, axis=axis)


def transpose(a):
    return a.T if isinstance(a, HyperDual) else np.asarray(a).T


def dot(a, b):
    """Inner product of two vectors (generic)."""
    if isinstance(a, HyperDual) or isinstance(b, HyperDual):
        s = _lift(a) * _lift(b)
        return HyperDual(np.sum(s.f, axis=-1), np.sum(s.e1, axis=-1),
                         np.sum(s.e2, axis=-1), np.sum(s.e12, axis=-1))
    return np.dot(a, b)


def solve(a, b):
    """Solve a @ x = b through the hyper-dual arithmetic.

    Differentiating a@x = b twice in eps1, eps2 gives the recursion below;
    only factorizations of the value part are needed.
    """
    if not (isinstance(a, HyperDual) or isinstance(b, HyperDual)):
        return np.linalg.solve(a, b)
    a, b = _lift(a), _lift(b)
    x0 = np.linalg.solve(a.f, b.f)
    x1 = np.linalg.solve(a.f, b.e1 - a.e1 @ x0)
    x2 = np.linalg.solve(a.f, b.e2 - a.e2 @ x0)
    x12 = np.linalg.solve(a.f, b.e12 - a.e12 @ x0 - a.e1 @ x2 - a.e2 @ x1)
    return HyperDual(x0, x1, x2, x12)


def inv(a):
    if isinstance(a, HyperDual):
        return solve(a, np.eye(a.shape[-1]))
    return np.linalg.inv(a)


def blockdiag(blocks):
    """Block-diagonal matrix from generic square blocks."""
    if not any(isinstance(b, HyperDual) for b in blocks):
        import scipy.linalg
        return scipy.linalg.block_diag(*blocks)
    blocks = [_lift(b) for b in blocks]
    n = sum(b.shape[0] for b in blocks)
    parts = {name: np.zeros((n, n)) for name in ("f", "e1", "e2", "e12")}
    i = 0
    for b in blocks:
        m = b.shape[0]
        for name in parts:
            parts[name][i:i + m, i:i + m] = getattr(b, name)
        i += m
    return HyperDual(parts["f"], parts["e1"], parts["e2"], parts["e12"])
