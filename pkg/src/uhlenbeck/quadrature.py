"""Small one-dimensional quadrature and search helpers."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     rtol: float = 1e-10, max_depth: int = 60) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    The tolerance is relative to the magnitude of the first whole-interval
    estimate (with an absolute floor of ``rtol * 1e-300`` so zero integrands
    terminate).
    """
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    tol = max(abs(whole) * rtol, 1e-300)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a, b) -> np.ndarray:
    """Vectorised 10-point Gauss-Legendre rule; ``a`` and ``b`` may be arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    return half * np.sum(_GL_WEIGHTS * f(x), axis=-1)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[np.ndarray], np.ndarray], lo, hi,
                       iterations: int = 80) -> tuple[np.ndarray, np.ndarray]:
    """Maximise a unimodal function on ``[lo, hi]`` elementwise.

    ``f`` must accept arrays so that many independent searches run at once.
    Returns ``(argmax, max)``.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iterations):
        c = hi - _INV_PHI * (hi - lo)
        d = lo + _INV_PHI * (hi - lo)
        left = f(c) >= f(d)
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
    x = 0.5 * (lo + hi)
    return x, f(x)
