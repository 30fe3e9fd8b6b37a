"""Young functions generated by a growth coefficient ``a``.

Given ``a : (0, inf) -> (0, inf)`` this module builds ``b(t) = a(t) t`` and
``B(t) = int_0^t b``, evaluates the conjugate ``B~``, the regularisation
``a_eps(t) = a(sqrt(t^2 + eps^2))`` and the map ``V_eps(P) = sqrt(a_eps(|P|)) P``,
and fits the constants of the usual doubling/sandwich inequalities on
sample grids.

Constants that the theory only asserts to exist are *fitted*: every check
returns the smallest constant that makes the inequality true on the grid and
passes when that constant is finite and positive.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import (DivergentIntegral, DomainError, IndexViolation,
                     NonPositiveCoefficient, SingularAtZero)
from .quadrature import adaptive_simpson, gauss_legendre, golden_section_max

QUAD_RTOL = 1e-10
TABLE_FLOOR = 1e-12
TABLE_CEIL = 1e12
TABLE_PER_DECADE = 16


def default_grid(lo: float = 1e-6, hi: float = 1e6, num: int = 1001) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), num)


# --------------------------------------------------------------------------
# growth coefficients


@dataclass(frozen=True)
class GrowthCoefficient:
    """A positive C^1 function ``a`` on ``(0, inf)`` with access to ``a'``.

    ``eval`` and ``deriv`` must accept floats and numpy arrays.
    ``deriv_over_t`` (``a'(t)/t``) is optional; it is used by the Newton
    Jacobian of the solver, where dividing by ``t`` would lose accuracy.
    """

    eval: Callable
    deriv: Callable
    domain_floor: float = TABLE_FLOOR
    analytic_indices: tuple[float, float] | None = None
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)
    _deriv_over_t: Callable | None = field(default=None, repr=False, compare=False)

    def __call__(self, t):
        return self.eval(t)

    def q(self, t):
        """``Q_a(t) = t a'(t) / a(t)``."""
        t = np.asarray(t, dtype=float)
        return t * self.deriv(t) / self.eval(t)

    def deriv_over_t(self, t):
        if self._deriv_over_t is not None:
            return self._deriv_over_t(t)
        return self.deriv(t) / t

    @property
    def singular_at_zero(self) -> bool:
        """True when ``a(0+)`` is infinite (or unknown)."""
        if self.analytic_indices is None:
            return True
        return self.analytic_indices[0] < 0

    # -- families -----------------------------------------------------------

    @classmethod
    def power(cls, p: float) -> "GrowthCoefficient":
        """``a(t) = t^(p-2)``, the p-Laplacian coefficient."""
        e = float(p) - 2.0
        return cls(
            eval=lambda t: np.power(t, e),
            deriv=lambda t: e * np.power(t, e - 1.0),
            analytic_indices=(e, e),
            label="power",
            params={"p": float(p)},
            _deriv_over_t=lambda t: e * np.power(t, e - 2.0),
        )

    @classmethod
    def constant(cls, value: float = 1.0) -> "GrowthCoefficient":
        v = float(value)
        return cls(
            eval=lambda t: np.full_like(np.asarray(t, dtype=float), v)[()],
            deriv=lambda t: np.zeros_like(np.asarray(t, dtype=float))[()],
            analytic_indices=(0.0, 0.0),
            label="constant",
            params={"value": v},
            _deriv_over_t=lambda t: np.zeros_like(np.asarray(t, dtype=float))[()],
        )

    @classmethod
    def power_log(cls, p: float, q: float) -> "GrowthCoefficient":
        """``a(t) = t^(p-2) log(1+t)^q``.

        ``Q_a`` decreases monotonically from ``p-2+q`` (at 0) to ``p-2`` (at
        infinity) when ``q > 0``, so the indices are known in closed form.
        """
        e, q = float(p) - 2.0, float(q)

        def ev(t):
            return np.power(t, e) * np.power(np.log1p(t), q)

        def dv(t):
            t = np.asarray(t, dtype=float)
            return ev(t) * (e / t + q / ((1.0 + t) * np.log1p(t)))

        lo, hi = sorted((e, e + q))
        return cls(eval=ev, deriv=dv, analytic_indices=(lo, hi), label="power_log",
                   params={"p": float(p), "q": q})

    @classmethod
    def tabulated(cls, points: Sequence[Sequence[float]]) -> "GrowthCoefficient":
        """Monotone interpolation of ``(t, a)`` samples in log-log coordinates.

        Outside the table the end slopes are continued as power laws; ``a'``
        comes from a central finite difference of the interpolant.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise DomainError("tabulated coefficient needs at least two (t, a) pairs")
        pts = pts[np.argsort(pts[:, 0])]
        if np.any(pts[:, 0] <= 0):
            raise DomainError("tabulated abscissae must be positive")
        if np.any(pts[:, 1] <= 0):
            raise NonPositiveCoefficient("tabulated values must be positive")
        x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
        spline = interpolate.PchipInterpolator(x, y, extrapolate=False)
        s_lo = (y[1] - y[0]) / (x[1] - x[0])
        s_hi = (y[-1] - y[-2]) / (x[-1] - x[-2])

        def ev(t):
            lt = np.log(np.asarray(t, dtype=float))
            inner = spline(np.clip(lt, x[0], x[-1]))
            out = np.where(lt < x[0], y[0] + s_lo * (lt - x[0]),
                           np.where(lt > x[-1], y[-1] + s_hi * (lt - x[-1]), inner))
            return np.exp(out)[()]

        def dv(t, h=1e-6):
            t = np.asarray(t, dtype=float)
            return (ev(t * (1 + h)) - ev(t * (1 - h))) / (2.0 * h * t)

        return cls(eval=ev, deriv=dv, label="tabulated",
                   params={"points": pts.tolist()})

    @classmethod
    def from_config(cls, cfg: dict) -> "GrowthCoefficient":
        """Build from ``{"family": "power", "p": ..}`` style dictionaries."""
        family = cfg.get("family", "power")
        if family == "power":
            return cls.power(cfg["p"])
        if family == "power_log":
            return cls.power_log(cfg["p"], cfg["q"])
        if family == "constant":
            return cls.constant(cfg.get("value", 1.0))
        if family == "tabulated":
            return cls.tabulated(cfg["points"])
        raise DomainError(f"unknown coefficient family {family!r}")


@dataclass(frozen=True)
class RegularizedCoefficient:
    """``a_eps(t) = a(sqrt(t^2 + eps^2))``; finite and smooth at ``t = 0``."""

    base: GrowthCoefficient
    epsilon: float
    domain_floor: float = 0.0

    def _s(self, t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(t * t + self.epsilon ** 2)

    def eval(self, t):
        return self.base.eval(self._s(t))

    __call__ = eval

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        s = self._s(t)
        return self.base.deriv(s) * t / s

    def deriv_over_t(self, t):
        s = self._s(t)
        return self.base.deriv(s) / s

    def q(self, t):
        t = np.asarray(t, dtype=float)
        s = self._s(t)
        return self.base.q(s) * (t * t) / (s * s)

    @property
    def analytic_indices(self):
        if self.base.analytic_indices is None:
            return None
        i, s = self.base.analytic_indices
        return (min(i, 0.0), max(s, 0.0))

    @property
    def singular_at_zero(self) -> bool:
        return False

    @property
    def label(self) -> str:
        return f"{self.base.label}_eps"

    @property
    def params(self) -> dict:
        return {**self.base.params, "epsilon": self.epsilon}


Coefficient = GrowthCoefficient | RegularizedCoefficient


def regularize(a: GrowthCoefficient, eps: float) -> RegularizedCoefficient:
    if not eps > 0:
        raise DomainError(f"regularisation parameter must be positive, got {eps}")
    if a.analytic_indices is not None:
        i, s = a.analytic_indices
        if not (i > -1 and np.isfinite(s)):
            raise DomainError("regularisation needs i_a > -1 and s_a < inf")
    return RegularizedCoefficient(a, float(eps))


# --------------------------------------------------------------------------
# indices


class Indices(NamedTuple):
    lower: float
    upper: float
    nonfinite: bool = False


def compute_indices(a: Coefficient, grid: np.ndarray | None = None) -> Indices:
    """Sampled ``(inf, sup)`` of ``Q_a`` over a log-spaced grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty sample grid")
    with np.errstate(all="ignore"):
        values = np.asarray(a.eval(grid), dtype=float)
        if np.any(values <= 0):
            bad = grid[values <= 0][0]
            raise NonPositiveCoefficient(f"a(t) <= 0 at t = {bad:g}")
        q = np.asarray(a.q(grid), dtype=float)
    finite = np.isfinite(q)
    if not finite.any():
        return Indices(math.nan, math.nan, True)
    return Indices(float(q[finite].min()), float(q[finite].max()), not finite.all())


# --------------------------------------------------------------------------
# the Young pair b, B


class YoungPair:
    """``b(t) = a(t) t`` and ``B(t) = int_0^t b(s) ds``.

    ``B`` is tabulated once on a log-spaced set of knots by adaptive Simpson
    (in the variable ``log s``) and evaluated in between with a 10-point
    Gauss-Legendre rule, so that arrays of arguments are handled vectorially.
    Below the first knot the integrand is continued as a power law with the
    local exponent of ``b`` there.
    """

    def __init__(self, a: Coefficient, quadrature_tol: float = QUAD_RTOL,
                 t_max: float = TABLE_CEIL):
        self.a = a
        self.quadrature_tol = quadrature_tol
        floor = max(a.domain_floor, TABLE_FLOOR)
        decades = math.log10(t_max / floor)
        self.knots = np.logspace(math.log10(floor), math.log10(t_max),
                                 int(round(decades * TABLE_PER_DECADE)) + 1)
        self._logk = np.log(self.knots)
        self.floor_exponent = float(a.q(floor)) + 1.0
        if not self.floor_exponent > -1:
            raise IndexViolation("b is not integrable at 0")
        b0 = float(self.b(floor))
        head = b0 * floor / (self.floor_exponent + 1.0)
        cells = [adaptive_simpson(self._log_integrand_scalar, lo, hi, quadrature_tol)
                 for lo, hi in zip(self._logk[:-1], self._logk[1:])]
        self.table = head + np.concatenate([[0.0], np.cumsum(cells)])

    def b(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.where(t > 0, self.a.eval(np.where(t > 0, t, 1.0)) * t, 0.0)
        return out[()]

    def _log_integrand_scalar(self, u: float) -> float:
        s = math.exp(u)
        return float(self.a.eval(s)) * s * s

    def _log_integrand(self, u):
        s = np.exp(u)
        return self.a.eval(s) * s * s

    def B(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.knots[-1]):
            raise DomainError("B evaluated outside [0, t_max]")
        flat = t.ravel()
        out = np.zeros_like(flat)
        low = flat < self.knots[0]
        if low.any():
            tl = flat[low]
            out[low] = self.table[0] * (tl / self.knots[0]) ** (self.floor_exponent + 1.0)
        hi = ~low
        if hi.any():
            th = flat[hi]
            k = np.clip(np.searchsorted(self.knots, th, side="right") - 1, 0,
                        len(self.knots) - 2)
            out[hi] = self.table[k] + gauss_legendre(self._log_integrand,
                                                     self._logk[k], np.log(th))
        return out.reshape(t.shape)[()]

    __call__ = B

    def conjugate(self, y):
        """``B~(y) = sup_{s >= 0} (s y - B(s))`` by grid search plus golden section."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros_like(y)
        pos = y > 0
        if not pos.any():
            return out if out.size > 1 else out[0]
        yp = y[pos]
        s = self.knots
        phi = yp[:, None] * s[None, :] - self.table[None, :]
        k = np.argmax(phi, axis=1)
        if np.any(k == len(s) - 1):
            raise DomainError("conjugate maximiser lies beyond the tabulated range")
        lo = np.where(k > 0, s[np.maximum(k - 1, 0)], 0.0)
        hi = s[k + 1]
        _, best = golden_section_max(lambda x: yp * x - self.B(x), lo, hi, iterations=90)
        out[pos] = np.maximum(best, phi[np.arange(len(k)), k])
        return out if out.size > 1 else out[0]


def build_young_pair(a: Coefficient, quadrature_tol: float = QUAD_RTOL,
                     grid: np.ndarray | None = None) -> YoungPair:
    """Construct ``(b, B)``; raises :class:`IndexViolation` if ``b`` decreases."""
    grid = default_grid() if grid is None else grid
    pair = YoungPair(a, quadrature_tol)
    bv = pair.b(grid)
    drops = np.diff(bv) < -1e-12 * np.abs(bv[1:])
    if drops.any():
        raise IndexViolation(f"b decreases near t = {grid[1:][drops][0]:g} (needs i_a >= -1)")
    return pair


# --------------------------------------------------------------------------
# checks with fitted constants


@dataclass(frozen=True)
class CheckRow:
    """One line of an inequality report."""

    quantity: str
    constant: float
    passed: bool
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "passed", bool(self.passed))


def _positive_finite(*cs: float) -> bool:
    return all(np.isfinite(c) and c > 0 for c in cs)


def young_checks(a: GrowthCoefficient, grid: np.ndarray | None = None,
                 pair: YoungPair | None = None, tol: float = 1e-8) -> list[CheckRow]:
    """Index, doubling, conjugate and power-sandwich relations of ``b`` and ``B``."""
    grid = default_grid() if grid is None else grid
    pair = build_young_pair(a, grid=grid) if pair is None else pair
    # closed-form indices are the true inf/sup; sampled ones can fall short of them
    ia_g, sa_g, _ = compute_indices(a, grid)
    ia, sa = a.analytic_indices or (ia_g, sa_g)
    rows: list[CheckRow] = []

    b = pair.b
    bg = b(grid)
    ib, sb, _ = compute_indices_of(b, grid)
    rows.append(CheckRow("index_b_lower", ib - ia_g,
                         abs(ib - (ia_g + 1)) <= 1e-6 * max(1.0, abs(ia_g)), "i_b - i_a"))
    rows.append(CheckRow("index_b_upper", sb - sa_g,
                         abs(sb - (sa_g + 1)) <= 1e-6 * max(1.0, abs(sa_g)), "s_b - s_a"))

    Bg = pair.B(grid)
    ratio = grid * bg / Bg
    rows.append(CheckRow("tb_over_B_min", float(ratio.min()),
                         ratio.min() >= 1.0 - tol, "B(t) <= t b(t)"))
    rows.append(CheckRow("tb_over_B_max", float(ratio.max()),
                         ratio.max() <= sa + 2.0 + tol, "t b(t) <= (s_a + 2) B(t)"))

    iB, sB, _ = compute_indices_of(pair.B, grid)
    rows.append(CheckRow("index_B_lower", iB, iB >= ib + 1 - 1e-6, "i_B >= i_b + 1"))
    rows.append(CheckRow("index_B_upper", sB, sB <= sb + 1 + 1e-6, "s_B <= s_b + 1"))

    tb = grid * bg
    bprime = a.deriv(grid) * grid + a.eval(grid)
    c = float(np.max(grid * bprime / bg))
    rows.append(CheckRow("tb_prime_over_b", c, c <= sa + 1 + 1e-3, "t b'(t) <= (s_a + 1) b(t)"))

    c = float(np.max(b(2.0 * grid) / bg))
    rows.append(CheckRow("delta2_b", c, _positive_finite(c), "b(2t) <= c b(t)"))
    c = float(np.max(pair.B(2.0 * grid) / Bg))
    rows.append(CheckRow("delta2_B", c, _positive_finite(c), "B(2t) <= c B(t)"))

    conj = pair.conjugate(bg)
    c = float(np.max(conj / Bg))
    exact = float(np.max(np.abs(conj - (tb - Bg)) / (tb - Bg)))
    rows.append(CheckRow("conjugate_of_b", c, _positive_finite(c) and exact < 1e-6,
                         "B~(b(t)) <= c B(t)"))
    rows.append(CheckRow("conjugate_below_B2t", float(np.max(conj / pair.B(2 * grid))),
                         bool(np.all(conj <= pair.B(2 * grid) * (1 + tol))),
                         "B~(b(t)) <= B(2t)"))

    a1 = float(a.eval(1.0))
    av = a.eval(grid)
    lower = a1 * np.minimum(grid ** ia, grid ** sa)
    upper = a1 * np.maximum(grid ** ia, grid ** sa)
    ok = bool(np.all(lower <= av * (1 + tol)) and np.all(av <= upper * (1 + tol)))
    slack = float(np.max(np.maximum(lower / av, av / upper)))
    rows.append(CheckRow("power_sandwich", slack, ok,
                         "a(1) min(t^i, t^s) <= a(t) <= a(1) max(t^i, t^s)"))
    return rows


def compute_indices_of(f: Callable, grid: np.ndarray) -> Indices:
    """Indices ``inf/sup t f'(t)/f(t)`` of an arbitrary positive function.

    The logarithmic derivative is taken by central differences in ``log t``;
    used for ``b`` and ``B`` where no closed-form derivative is stored.
    """
    h = 1e-5
    with np.errstate(all="ignore"):
        q = (np.log(f(grid * math.exp(h))) - np.log(f(grid * math.exp(-h)))) / (2 * h)
    finite = np.isfinite(q)
    return Indices(float(q[finite].min()), float(q[finite].max()), not finite.all())


def epsindex_check(a: GrowthCoefficient, eps: float,
                   grid: np.ndarray | None = None, tol: float = 1e-12) -> CheckRow:
    grid = default_grid() if grid is None else grid
    ia, sa, _ = compute_indices(a, grid)
    ie, se, _ = compute_indices(regularize(a, eps), grid)
    ok = ie >= min(ia, 0.0) - tol and se <= max(sa, 0.0) + tol
    return CheckRow("eps_indices", ie, ok, f"eps={eps:g}: [{ie:.6g}, {se:.6g}]")


def sandwich_check(a: GrowthCoefficient, eps: float,
                   grid: np.ndarray | None = None,
                   pair: YoungPair | None = None) -> list[CheckRow]:
    """Fit the constants in the two-sided bounds for ``a_eps(t) t^2``, ``B_eps`` and
    ``B~(b_eps)`` in terms of ``B(t) + B(eps)``.
    """
    grid = default_grid() if grid is None else grid
    pair = build_young_pair(a, grid=grid) if pair is None else pair
    ae = regularize(a, eps)
    Bt = pair.B(grid)
    Be = float(pair.B(eps))
    energy = ae.eval(grid) * grid ** 2

    big = grid >= eps
    c1 = float(np.min(energy[big] / Bt[big])) if big.any() else float(np.min(energy / Bt))
    c2 = max(0.0, float(np.max((c1 * Bt - energy) / Be)))
    c3 = float(np.max(energy / (Bt + Be)))
    rows = [
        CheckRow("eps_energy_lower_c1", c1, _positive_finite(c1),
                 "c1 B(t) - c2 B(eps) <= a_eps(t) t^2"),
        CheckRow("eps_energy_lower_c2", c2, bool(np.isfinite(c2) and c2 >= 0)),
        CheckRow("eps_energy_upper_c3", c3, _positive_finite(c3),
                 "a_eps(t) t^2 <= c3 (B(t) + B(eps))"),
    ]
    pair_e = YoungPair(ae)
    c = float(np.max(pair_e.B(grid) / (Bt + Be)))
    rows.append(CheckRow("eps_young_upper", c, _positive_finite(c),
                         "B_eps(t) <= c (B(t) + B(eps))"))
    conj = pair.conjugate(pair_e.b(grid))
    c = float(np.max(conj / (Bt + Be)))
    rows.append(CheckRow("eps_conjugate_upper", c, _positive_finite(c),
                         "B~(b_eps(t)) <= c (B(t) + B(eps))"))
    rows.append(epsindex_check(a, eps, grid))
    return rows


# --------------------------------------------------------------------------
# V map and regularisation limit


def v_map(a: GrowthCoefficient, eps: float, P: np.ndarray) -> np.ndarray:
    """``V_eps(P) = sqrt(a_eps(|P|)) P``; ``eps = 0`` uses ``a`` itself."""
    P = np.asarray(P, dtype=float)
    norm = float(np.linalg.norm(P))
    if eps < 0:
        raise DomainError("eps must be non-negative")
    coef = a if eps == 0 else regularize(a, eps)
    if norm == 0.0:
        if eps == 0 and coef.singular_at_zero:
            raise SingularAtZero("V_0(0) is undefined when a blows up at 0")
        return np.zeros_like(P)
    return math.sqrt(float(coef.eval(norm))) * P


def monotonicity_ratio(a: GrowthCoefficient, eps: float, pairs: int = 10_000,
                       radius: tuple[float, float] = (1e-2, 1e2),
                       shape: tuple[int, int] = (2, 2),
                       rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Min and max over random ``(P, Q)`` of

        (a_eps(|P|)P - a_eps(|Q|)Q) . (P - Q) / |V_eps(P) - V_eps(Q)|^2 .
    """
    rng = np.random.default_rng(0) if rng is None else rng
    coef = a if eps == 0 else regularize(a, eps)

    def sample():
        d = rng.standard_normal((pairs, *shape))
        d /= np.linalg.norm(d.reshape(pairs, -1), axis=1)[:, None, None]
        r = np.exp(rng.uniform(np.log(radius[0]), np.log(radius[1]), pairs))
        return d * r[:, None, None], r

    P, rp = sample()
    Q, rq = sample()
    ap = coef.eval(rp)[:, None, None]
    aq = coef.eval(rq)[:, None, None]
    num = np.sum((ap * P - aq * Q) * (P - Q), axis=(1, 2))
    den = np.sum((np.sqrt(ap) * P - np.sqrt(aq) * Q) ** 2, axis=(1, 2))
    ratio = num / den
    return float(ratio.min()), float(ratio.max())


def regularization_error(a: GrowthCoefficient, eps: float, L: float = 10.0,
                         grid: np.ndarray | None = None) -> float:
    """``sup_{|P| <= L} |a_eps(|P|) P - a(|P|) P|`` sampled on ``(0, L]``."""
    if grid is None:
        grid = np.logspace(-12, math.log10(L), 4001)
    grid = grid[grid <= L]
    ae = regularize(a, eps)
    return float(np.max(grid * np.abs(ae.eval(grid) - a.eval(grid))))


def regularization_limit(a: GrowthCoefficient, ks: Sequence[int] = range(21),
                         L: float = 10.0) -> np.ndarray:
    """Errors along the schedule ``eps = 2^-k``."""
    return np.array([regularization_error(a, 2.0 ** -k, L) for k in ks])


# --------------------------------------------------------------------------
# Sobolev-type auxiliary functions


class SobolevAux:
    """``H_sigma`` and ``A_sigma = A o H_sigma^{-1}`` for a Young function ``A``.

    ``H_sigma`` is tabulated on a log grid by cumulative quadrature and
    inverted by monotone interpolation in log-log coordinates.
    """

    def __init__(self, A: Callable, sigma: float, s_A: float | None = None, n: int = 2,
                 lo: float = 1e-10, hi: float = 1e10, per_decade: int = 40):
        if s_A is not None and not sigma > max(s_A, n):
            raise DomainError(f"sigma={sigma} must exceed max(s_A, n)={max(s_A, n)}")
        self.A = A
        self.sigma = float(sigma)
        self.n = n
        self.sigma_conj = sigma / (sigma - 1.0)
        expo = 1.0 / (sigma - 1.0)

        def integrand(t):
            return (t / A(t)) ** expo

        s = np.logspace(math.log10(lo), math.log10(hi),
                        int(round(math.log10(hi / lo) * per_decade)) + 1)
        pieces = []
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                head, _ = integrate.quad(integrand, 0.0, s[0], limit=200)
                for x0, x1 in zip(s[:-1], s[1:]):
                    pieces.append(integrate.quad(integrand, x0, x1, epsrel=1e-12)[0])
            except (integrate.IntegrationWarning, ZeroDivisionError, OverflowError) as exc:
                raise DivergentIntegral(f"H_sigma quadrature failed: {exc}") from exc
        cum = head + np.concatenate([[0.0], np.cumsum(pieces)])
        if not (np.all(np.isfinite(cum)) and head >= 0):
            raise DivergentIntegral("H_sigma integrand is not integrable at 0")
        self._s = s
        self._H = cum ** (1.0 / self.sigma_conj)
        if np.any(np.diff(self._H) <= 0):
            raise DivergentIntegral("H_sigma is not strictly increasing on the table")
        self._ls, self._lH = np.log(s), np.log(self._H)

    @staticmethod
    def _loglog(x, xs, ys):
        """Piecewise-linear in log-log, continued with the end slopes."""
        out = np.interp(x, xs, ys)
        lo, hi = x < xs[0], x > xs[-1]
        out[lo] = ys[0] + (x[lo] - xs[0]) * (ys[1] - ys[0]) / (xs[1] - xs[0])
        out[hi] = ys[-1] + (x[hi] - xs[-1]) * (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return out

    def H(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(self._loglog(np.log(s[pos]), self._ls, self._lH))
        return out[()]

    def H_inv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(self._loglog(np.log(t[pos]), self._lH, self._ls))
        return out[()]

    def A_sigma(self, t):
        return self.A(self.H_inv(t))


class _Profile:
    """Both sides of the one-dimensional reduction for a fixed profile ``phi``.

    ``S(s) = int_s^|Omega| phi(r) r^{-(n-1)/n} dr`` does not depend on the
    constant, so it is tabulated once (cell integrals on a log grid, linear
    interpolation between nodes) and the outer integral is a composite
    Gauss-Legendre sum.
    """

    def __init__(self, aux: SobolevAux, phi: Callable, measure: float, cells: int = 600):
        self.aux, self.measure = aux, measure
        expo = -(aux.n - 1.0) / aux.n
        nodes = np.concatenate([[0.0], measure * np.logspace(-12, 0, cells)])
        with warnings.catch_warnings():
            # profiles may have jumps; quad's roundoff notices there are expected
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            self.rhs = integrate.quad(lambda r: aux.A(phi(r)), 0.0, measure, limit=200)[0]
            pieces = [integrate.quad(lambda r: phi(r) * r ** expo, lo, hi, limit=50)[0]
                      for lo, hi in zip(nodes[:-1], nodes[1:])]
        S_nodes = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        x, w = np.polynomial.legendre.leggauss(10)
        lo, hi = nodes[:-1, None], nodes[1:, None]
        pts = 0.5 * (hi - lo) * x[None, :] + 0.5 * (hi + lo)
        self.weights = (0.5 * (hi - lo) * w[None, :]).ravel()
        self.S = np.interp(pts.ravel(), nodes, S_nodes)

    def sides(self, c: float) -> tuple[float, float]:
        if self.rhs == 0.0:
            return 0.0, 0.0
        aux = self.aux
        denom = c * self.measure ** (1.0 / aux.n - 1.0 / aux.sigma) * self.rhs ** (1.0 / aux.sigma)
        lhs = float(np.sum(self.weights * aux.A_sigma(self.S / denom)))
        return lhs, self.rhs


def _sobolev_sides(aux: SobolevAux, phi: Callable, measure: float, c: float):
    return _Profile(aux, phi, measure).sides(c)


def _minimal_constant(aux: SobolevAux, phi: Callable, measure: float) -> float:
    """Smallest ``c`` for which the one-dimensional inequality holds for ``phi``."""
    prof = _Profile(aux, phi, measure)

    def gap(logc):
        lhs, rhs = prof.sides(math.exp(logc))
        return math.log(lhs) - math.log(rhs) if lhs > 0 else -50.0

    lo, hi = -10.0, 10.0
    if gap(lo) <= 0:
        return math.exp(lo)
    return math.exp(optimize.brentq(gap, lo, hi, xtol=1e-10))


def calibration_family(measure: float = 1.0) -> list[Callable]:
    fam: list[Callable] = []
    for height in (0.1, 1.0, 10.0):
        for width in (0.25, 1.0):
            w = width * measure
            fam.append(lambda r, h=height, w=w: h * (r < w))
            fam.append(lambda r, h=height, w=w: h * max(0.0, 1.0 - r / w))
    return fam


def calibrate_sobolev_constant(aux: SobolevAux, measure: float = 1.0,
                               family: Sequence[Callable] | None = None) -> float:
    family = calibration_family(measure) if family is None else family
    return max(_minimal_constant(aux, phi, measure) for phi in family)


def sobolev_check(A: Callable, sigma: float, phi: Callable, measure: float = 1.0,
                  n: int = 2, s_A: float | None = None, c: float | None = None,
                  tol: float = 1e-6) -> tuple[bool, float, float, float]:
    """One-dimensional reduction of the Orlicz-Sobolev inequality for a profile ``phi``.

    Returns ``(passed, lhs, rhs, c)``; when ``c`` is not given it is fitted on
    :func:`calibration_family`.
    """
    aux = SobolevAux(A, sigma, s_A=s_A, n=n)
    if c is None:
        c = calibrate_sobolev_constant(aux, measure)
    lhs, rhs = _sobolev_sides(aux, phi, measure, c)
    return lhs <= rhs * (1 + tol), lhs, rhs, c
