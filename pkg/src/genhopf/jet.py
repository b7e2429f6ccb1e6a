"""Truncated Taylor arithmetic for exact derivatives of composed functions.

A :class:`Jet` carries a function's value and derivatives at one point (or at
every point of an array, elementwise).  Internally the normalised Taylor
coefficients ``c[k] = f^(k)(x) / k!`` are stored because products and the
elementary-function recurrences are simplest in that basis; :attr:`Jet.d`
returns the raw derivatives.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

#: Largest order callers may request from :func:`genhopf.expr.eval_jet`.
MAX_ORDER = 4
#: Headroom for derivative nodes nested inside expressions.
INTERNAL_MAX_ORDER = 12

TAN_POLE_TOL = 1e-12

_FACT = np.array([math.factorial(k) for k in range(INTERNAL_MAX_ORDER + 1)], dtype=float)


class DomainError(ValueError):
    """Raised when a function is evaluated outside its real domain."""


Number = Union[int, float, np.ndarray]


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs: np.ndarray):
        self.c = np.asarray(coeffs, dtype=float)

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value: Number, order: int, shape=()) -> "Jet":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, x: Number, order: int) -> "Jet":
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, d) -> "Jet":
        d = np.asarray(d, dtype=float)
        n = d.shape[0]
        scale = _FACT[:n].reshape((n,) + (1,) * (d.ndim - 1))
        return cls(d / scale)

    # -- views --------------------------------------------------------------
    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def d(self) -> np.ndarray:
        n = self.c.shape[0]
        scale = _FACT[:n].reshape((n,) + (1,) * (self.c.ndim - 1))
        return self.c * scale

    @property
    def value(self):
        return self.c[0]

    def derivative(self, n: int):
        return self.c[n] * _FACT[n]

    def shift(self, n: int) -> "Jet":
        """Jet of the n-th derivative, losing n orders."""
        if n > self.order:
            raise ValueError("cannot shift a jet past its order")
        d = self.d[n:]
        return Jet.from_derivatives(d)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def __repr__(self) -> str:
        return f"Jet(d={self.d.tolist()})"

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, np.shape(self.c[0]))

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.c + other.c)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.c - other.c)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            acc = 0.0
            for i in range(k + 1):
                acc = acc + a[i] * b[k - i]
            out[k] = acc
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if np.any(np.asarray(other) == 0):
                raise DomainError("division by zero")
            return Jet(self.c / other)
        a, b = self.c, other.c
        if np.any(b[0] == 0):
            raise DomainError("division by zero")
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(out.shape[0]):
            acc = a[k]
            for i in range(1, k + 1):
                acc = acc - b[i] * out[k - i]
            out[k] = acc / b[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p):
        if isinstance(p, Jet):
            if np.all(p.c[1:] == 0):
                p = p.c[0]
                if np.ndim(p) and np.all(p == p.flat[0]):
                    p = float(p.flat[0])
            else:
                return exp(p * log(self))
        if np.ndim(p) == 0 and float(p) == int(p):
            return _int_pow(self, int(p))
        return _real_pow(self, np.asarray(p, dtype=float))


def _int_pow(a: Jet, n: int) -> Jet:
    if n < 0:
        return 1.0 / _int_pow(a, -n)
    result = Jet.constant(1.0, a.order, np.shape(a.c[0]))
    base = a
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _real_pow(a: Jet, p) -> Jet:
    if np.any(a.c[0] <= 0):
        raise DomainError("non-integer power of a non-positive base")
    return exp(log(a) * p)


# -- elementary functions ---------------------------------------------------
# Recurrences follow from f' = g(a) a' written coefficientwise:
# k f_k = sum_{j=1..k} j a_j (g)_{k-j}.

def _as_jet(a) -> Jet:
    if isinstance(a, Jet):
        return a
    return Jet.constant(a, 0, np.shape(a))


def exp(a: Jet) -> Jet:
    a = _as_jet(a)
    c = a.c
    out = np.zeros_like(c)
    out[0] = np.exp(c[0])
    for k in range(1, c.shape[0]):
        acc = 0.0
        for j in range(1, k + 1):
            acc = acc + j * c[j] * out[k - j]
        out[k] = acc / k
    return Jet(out)


def log(a: Jet) -> Jet:
    a = _as_jet(a)
    c = a.c
    if np.any(c[0] <= 0):
        raise DomainError("ln of a non-positive number")
    out = np.zeros_like(c)
    out[0] = np.log(c[0])
    for k in range(1, c.shape[0]):
        acc = c[k] * k
        for j in range(1, k):
            acc = acc - j * out[j] * c[k - j]
        out[k] = acc / (k * c[0])
    return Jet(out)


def _sin_cos(a: Jet, hyperbolic: bool):
    c = a.c
    s = np.zeros_like(c)
    co = np.zeros_like(c)
    if hyperbolic:
        s[0], co[0] = np.sinh(c[0]), np.cosh(c[0])
    else:
        s[0], co[0] = np.sin(c[0]), np.cos(c[0])
    sign = 1.0 if hyperbolic else -1.0
    for k in range(1, c.shape[0]):
        acc_s = 0.0
        acc_c = 0.0
        for j in range(1, k + 1):
            acc_s = acc_s + j * c[j] * co[k - j]
            acc_c = acc_c + j * c[j] * s[k - j]
        s[k] = acc_s / k
        co[k] = sign * acc_c / k
    return Jet(s), Jet(co)


def sin(a: Jet) -> Jet:
    return _sin_cos(_as_jet(a), False)[0]


def cos(a: Jet) -> Jet:
    return _sin_cos(_as_jet(a), False)[1]


def tan(a: Jet) -> Jet:
    s, c = _sin_cos(_as_jet(a), False)
    if np.any(np.abs(c.c[0]) < TAN_POLE_TOL):
        raise DomainError("tan evaluated at a pole")
    return s / c


def sinh(a: Jet) -> Jet:
    return _sin_cos(_as_jet(a), True)[0]


def cosh(a: Jet) -> Jet:
    return _sin_cos(_as_jet(a), True)[1]


def tanh(a: Jet) -> Jet:
    s, c = _sin_cos(_as_jet(a), True)
    return s / c


def sqrt(a: Jet) -> Jet:
    a = _as_jet(a)
    c = a.c
    if np.any(c[0] < 0) or (c.shape[0] > 1 and np.any(c[0] == 0)):
        raise DomainError("sqrt of a negative number (or of zero with derivatives)")
    out = np.zeros_like(c)
    out[0] = np.sqrt(c[0])
    for k in range(1, c.shape[0]):
        acc = c[k]
        for j in range(1, k):
            acc = acc - out[j] * out[k - j]
        out[k] = acc / (2 * out[0])
    return Jet(out)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "ln": log,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "sqrt": sqrt,
}
