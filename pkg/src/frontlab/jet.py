"""Truncated bivariate Taylor jets.

A :class:`Jet2` of order ``n`` holds the Taylor coefficients ``c[i, j]`` of
``u**i * v**j`` (``i + j <= n``) of a scalar function around a base point, so
``c[i, j] = (d^(i+j) F / du^i dv^j) / (i! j!)``.  Coefficients are stored
flattened along the last axis; any leading axes are batch axes, which lets the
same code evaluate a whole sample grid at once.
"""

import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 3


@lru_cache(maxsize=None)
def monomials(order):
    """List of exponent pairs (i, j) with i + j <= order, graded order."""
    out = []
    for k in range(order + 1):
        for i in range(k, -1, -1):
            out.append((i, k - i))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(order):
    return {ij: a for a, ij in enumerate(monomials(order))}


@lru_cache(maxsize=None)
def _product_table(order):
    mons = monomials(order)
    idx = _index(order)
    m = len(mons)
    table = np.zeros((m * m, m))
    for a, (i1, j1) in enumerate(mons):
        for b, (i2, j2) in enumerate(mons):
            key = (i1 + i2, j1 + j2)
            if key in idx:
                table[a * m + b, idx[key]] = 1.0
    return table


@lru_cache(maxsize=None)
def _diff_table(order, axis):
    """Matrix mapping order-n coefficients to the order-(n-1) coefficients of d/du or d/dv."""
    src = _index(order)
    dst = monomials(order - 1)
    table = np.zeros((len(src), len(dst)))
    for b, (i, j) in enumerate(dst):
        if axis == 0:
            table[src[(i + 1, j)], b] = i + 1
        else:
            table[src[(i, j + 1)], b] = j + 1
    return table


@lru_cache(maxsize=None)
def _truncate_index(order, k):
    src = _index(order)
    return np.array([src[ij] for ij in monomials(k)])


class Jet2:
    __slots__ = ("coef", "order")
    __array_ufunc__ = None  # make ndarray <op> Jet2 defer to the reflected Jet2 method

    def __init__(self, coef, order):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-1] != len(monomials(order)):
            raise ValueError("coefficient count does not match order %d" % order)
        self.coef = coef
        self.order = order

    @classmethod
    def _make(cls, coef, order):
        """Unchecked constructor for internal use."""
        out = object.__new__(cls)
        out.coef = coef
        out.order = order
        return out

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, order, shape=()):
        coef = np.zeros(tuple(shape) + (len(monomials(order)),))
        coef[..., 0] = value
        return cls(coef, order)

    @classmethod
    def variable(cls, value, which, order):
        """Jet of the coordinate function u (which=0) or v (which=1) at ``value``."""
        value = np.asarray(value, dtype=float)
        coef = np.zeros(value.shape + (len(monomials(order)),))
        coef[..., 0] = value
        if order >= 1:
            coef[..., 1 + which] = 1.0
        return cls(coef, order)

    # access -------------------------------------------------------------

    @property
    def shape(self):
        return self.coef.shape[:-1]

    @property
    def value(self):
        return self.coef[..., 0]

    def __getitem__(self, ij):
        """Taylor coefficient c[i, j]."""
        return self.coef[..., _index(self.order)[tuple(ij)]]

    def partial(self, i, j):
        """Partial derivative d^(i+j)/du^i dv^j at the base point."""
        return self[i, j] * (math.factorial(i) * math.factorial(j))

    def grad(self):
        return np.stack([self.coef[..., 1], self.coef[..., 2]], axis=-1)

    def hessian(self):
        c = self.coef
        huu = 2.0 * c[..., 3]
        huv = c[..., 4]
        hvv = 2.0 * c[..., 5]
        return np.stack([np.stack([huu, huv], -1), np.stack([huv, hvv], -1)], -2)

    def diff(self, axis):
        """Jet of the partial derivative, one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet2(self.coef @ _diff_table(self.order, axis), self.order - 1)

    def truncate(self, k):
        if k > self.order:
            raise ValueError("cannot raise jet order")
        return Jet2(self.coef[..., _truncate_index(self.order, k)], k)

    def take(self, index):
        """Select batch entries (numpy indexing on the batch axes)."""
        return Jet2(self.coef[index], self.order)

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.order != self.order:
                raise ValueError("jet orders differ: %d vs %d" % (self.order, other.order))
            return other
        other = np.asarray(other, dtype=float)
        coef = np.zeros(other.shape + (self.coef.shape[-1],))
        coef[..., 0] = other
        return Jet2(coef, self.order)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            coef = self.coef.copy()
            coef[..., 0] += other
            return Jet2._make(coef, self.order)
        other = self._coerce(other)
        return Jet2._make(self.coef + other.coef, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        other = self._coerce(other)
        return Jet2._make(self.coef - other.coef, self.order)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet2._make(-self.coef, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            if isinstance(other, (int, float)):
                return Jet2._make(self.coef * other, self.order)
            other = np.asarray(other, dtype=float)
            return Jet2._make(self.coef * other[..., None], self.order)
        if other.order != self.order:
            raise ValueError("jet orders differ: %d vs %d" % (self.order, other.order))
        if self.order == 0:
            return Jet2._make(self.coef * other.coef, 0)
        outer = self.coef[..., :, None] * other.coef[..., None, :]
        m = outer.shape[-1]
        outer = outer.reshape(outer.shape[:-2] + (m * m,))
        return Jet2._make(outer @ _product_table(self.order), self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            other = np.asarray(other, dtype=float)
            return Jet2(self.coef / other[..., None], self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return self._coerce(other) * reciprocal(self)

    def powi(self, n):
        """Integer power by repeated squaring (exact Leibniz products)."""
        if n < 0:
            return reciprocal(self).powi(-n)
        result = Jet2.constant(1.0, self.order, self.shape)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self):
        return "Jet2(order=%d, coef=%r)" % (self.order, self.coef)


def compose(x, derivs):
    """Apply a scalar function given its derivatives ``derivs[k] = f^(k)(x0)`` at the base value."""
    h = Jet2(x.coef.copy(), x.order)
    h.coef[..., 0] = 0.0
    out = Jet2.constant(0.0, x.order, x.shape) + derivs[0]
    power = None
    for k in range(1, x.order + 1):
        power = h if power is None else power * h
        out = out + power * (np.asarray(derivs[k]) / math.factorial(k))
    return out


def reciprocal(x):
    a = x.value
    return compose(x, [1 / a, -1 / a**2, 2 / a**3, -6 / a**4])


def sqrt(x):
    s = np.sqrt(x.value)
    return compose(x, [s, 0.5 / s, -0.25 / s**3, 0.375 / s**5])


def exp(x):
    e = np.exp(x.value)
    return compose(x, [e, e, e, e])


def log(x):
    a = x.value
    return compose(x, [np.log(a), 1 / a, -1 / a**2, 2 / a**3])


def sin(x):
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, [s, c, -s, -c])


def cos(x):
    s, c = np.sin(x.value), np.cos(x.value)
    return compose(x, [c, -s, -c, s])


def tan(x):
    t = np.tan(x.value)
    sec2 = 1 + t * t
    return compose(x, [t, sec2, 2 * t * sec2, sec2 * (2 + 6 * t * t)])


def atan(x):
    a = x.value
    q = 1 + a * a
    return compose(x, [np.arctan(a), 1 / q, -2 * a / q**2, (6 * a * a - 2) / q**3])


def absolute(x):
    s = np.sign(x.value)
    z = np.zeros_like(s)
    return compose(x, [np.abs(x.value), s, z, z])


def powr(x, p):
    """Real power x**p for a positive base."""
    a = x.value
    return compose(
        x, [a**p, p * a ** (p - 1), p * (p - 1) * a ** (p - 2), p * (p - 1) * (p - 2) * a ** (p - 3)]
    )


def det2(a, b, c, d):
    return a * d - b * c


def det3(x, y, z):
    """Determinant of three 3-vectors of jets (rows x, y, z)."""
    return (
        x[0] * (y[1] * z[2] - y[2] * z[1])
        - x[1] * (y[0] * z[2] - y[2] * z[0])
        + x[2] * (y[0] * z[1] - y[1] * z[0])
    )


def dot(x, y):
    out = x[0] * y[0]
    for a, b in zip(x[1:], y[1:]):
        out = out + a * b
    return out


def cross(x, y):
    return [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]


@lru_cache(maxsize=None)
def _swap_index(order):
    idx = _index(order)
    return np.array([idx[(j, i)] for (i, j) in monomials(order)])


def swap(x):
    """Jet of F(v, u) given the jet of F(u, v) at the swapped base point."""
    return Jet2._make(x.coef[..., _swap_index(x.order)], x.order)
