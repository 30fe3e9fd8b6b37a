"""Nested dual numbers for exact higher derivatives of black-box closures.

A dual number ``a + b e`` with ``e**2 = 0`` carries one directional
derivative. Nesting (the parts may themselves be duals) gives mixed
derivatives of any order: three levels seeded along ``e_i``, ``e_j``,
``e_k`` return ``d^3 f / dx_i dx_j dx_k`` in the innermost tangent.

The math functions below dispatch on floats and duals alike, so a closure
written with them can be evaluated either way.
"""
from __future__ import annotations

import math


class Dual:
    __slots__ = ("re", "du")

    def __init__(self, re, du=0.0):
        self.re = re
        self.du = du

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.du + other.du)
        return Dual(self.re + other, self.du)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.re, -self.du)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re, self.re * other.du + self.du * other.re)
        return Dual(self.re * other, self.du * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = reciprocal(other)
            return self * inv
        return Dual(self.re / other, self.du / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        if isinstance(k, int) and k >= 0:
            out = 1.0
            for _ in range(k):
                out = out * self
            return out
        return Dual(self.re ** k, k * self.re ** (k - 1) * self.du)

    def __rpow__(self, base):
        return exp(self * math.log(base))


def reciprocal(x):
    if isinstance(x, Dual):
        r = reciprocal(x.re)
        return Dual(r, -(r * r) * x.du)
    return 1.0 / x


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.re)
        return Dual(s, x.du * reciprocal(2.0 * s))
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.du)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.re), x.du * reciprocal(x.re))
    return math.log(x)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.du)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -sin(x.re) * x.du)
    return math.cos(x)


def tanh(x):
    if isinstance(x, Dual):
        t = tanh(x.re)
        return Dual(t, (1.0 - t * t) * x.du)
    return math.tanh(x)
