"""Forward-mode automatic differentiation over dual scalars.

A :class:`Dual` carries a value and a tangent row. Tangents span only the
directions seeded for the evaluation at hand (a constraint's support), so
they stay narrow even when the surrounding problem is large. Code written
with ordinary arithmetic (including numpy object arrays) evaluates
unchanged over floats or duals; that is the single mechanism by which
constraint Jacobians are obtained.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix

from .errors import EvaluationFailure

_NDARRAY = np.ndarray


class Dual:
    """Scalar value plus tangent row w.r.t. the seeded directions.

    Binary ops with ndarrays defer to numpy so duals broadcast like scalars
    into object arrays.
    """

    __slots__ = ("v", "t")

    def __init__(self, v, t):
        self.v = v
        self.t = t

    def __repr__(self):
        return f"Dual({self.v}, {self.t})"

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v + o.v, self.t + o.t)
        if isinstance(o, _NDARRAY):
            return NotImplemented
        return Dual(self.v + o, self.t)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v - o.v, self.t - o.t)
        if isinstance(o, _NDARRAY):
            return NotImplemented
        return Dual(self.v - o, self.t)

    def __rsub__(self, o):
        if isinstance(o, _NDARRAY):
            return NotImplemented
        return Dual(o - self.v, -self.t)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v * o.v, self.v * o.t + o.v * self.t)
        if isinstance(o, _NDARRAY):
            return NotImplemented
        return Dual(self.v * o, self.t * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            inv = 1.0 / o.v
            val = self.v * inv
            return Dual(val, (self.t - val * o.t) * inv)
        if isinstance(o, _NDARRAY):
            return NotImplemented
        return Dual(self.v / o, self.t / o)

    def __rtruediv__(self, o):
        if isinstance(o, _NDARRAY):
            return NotImplemented
        inv = 1.0 / self.v
        val = o * inv
        return Dual(val, (-val * inv) * self.t)

    def __pow__(self, p):
        if isinstance(p, Dual):
            raise TypeError("dual exponents unsupported")
        if p == 2:
            return Dual(self.v * self.v, (2.0 * self.v) * self.t)
        return Dual(self.v**p, (p * self.v ** (p - 1)) * self.t)

    def __neg__(self):
        return Dual(-self.v, -self.t)

    def __pos__(self):
        return self

    # Comparisons look at values only; used for (rare) numeric branching.
    def __lt__(self, o):
        return self.v < _val(o)

    def __le__(self, o):
        return self.v <= _val(o)

    def __gt__(self, o):
        return self.v > _val(o)

    def __ge__(self, o):
        return self.v >= _val(o)

    def sin(self):
        return Dual(math.sin(self.v), math.cos(self.v) * self.t)

    def cos(self):
        return Dual(math.cos(self.v), -math.sin(self.v) * self.t)

    def sqrt(self):
        r = math.sqrt(self.v)
        return Dual(r, (0.5 / r) * self.t)


def _val(x):
    return x.v if isinstance(x, Dual) else x


def value_of(x):
    """Value part of a scalar or array of scalars, as float64."""
    if isinstance(x, Dual):
        return x.v
    if isinstance(x, np.ndarray) and x.dtype == object:
        return np.array([_val(e) for e in x.ravel()], dtype=float).reshape(x.shape)
    return np.asarray(x, dtype=float) if isinstance(x, np.ndarray) else float(x)


def sin(x):
    return x.sin() if isinstance(x, Dual) else math.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Dual) else math.cos(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Dual) else math.sqrt(x)


def seed(values, support=None):
    """Object vector with duals seeded along `support` (default: all entries).

    Entry ``values[support[j]]`` receives tangent e_j; other entries stay
    plain floats so zero columns cost nothing.
    """
    values = np.asarray(values, dtype=float)
    idx = np.arange(values.size) if support is None else np.asarray(support)
    out = np.empty(values.size, dtype=object)
    out[:] = values
    eye = np.eye(idx.size)
    for j, c in enumerate(idx):
        out[c] = Dual(values[c], eye[j])
    return out


def extract(outputs, width):
    """Split evaluator outputs into (values, dense Jacobian rows)."""
    if isinstance(outputs, Dual) or np.isscalar(outputs):
        outputs = [outputs]
    vals = np.empty(len(outputs))
    jac = np.zeros((len(outputs), width))
    for i, y in enumerate(outputs):
        if isinstance(y, Dual):
            vals[i] = y.v
            jac[i] = y.t
        else:
            vals[i] = y
    return vals, jac


def eval_with_jacobian(func, point, support=None):
    """Evaluate `func` at `point`, returning (values, dense rows over support)."""
    point = np.asarray(point, dtype=float)
    idx = np.arange(point.size) if support is None else np.asarray(support)
    vals, jac = extract(func(seed(point, idx)), idx.size)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(jac))):
        raise EvaluationFailure(f"non-finite value differentiating {func}")
    return vals, jac


def jacobian(func, point, support=None):
    """Exact first derivatives of `func` at `point` on the support columns.

    Returns a sparse matrix of shape (m, len(point)); columns outside the
    support are structurally zero.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    idx = np.arange(n) if support is None else np.asarray(support)
    _, rows = eval_with_jacobian(func, point, idx)
    m = rows.shape[0]
    data = rows.ravel()
    col = np.tile(idx, m)
    row = np.repeat(np.arange(m), idx.size)
    keep = data != 0.0
    return csr_matrix((data[keep], (row[keep], col[keep])), shape=(m, n))
