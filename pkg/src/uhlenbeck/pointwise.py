"""The pointwise identity for ``|div(a(|grad u|) grad u)|^2`` and its sharp lower bound.

For ``u in C^3`` and ``g = |grad u|`` the identity reads

    |div(a(g) grad u)|^2 = div[a(g)^2 ((Lap u)^T grad u - grad(g^2)/2)]
                          + a(g)^2 [|hess u|^2 + 2 Q_a(g) |grad g|^2
                                    + Q_a(g)^2 |(grad u/g)(grad g)^T|^2],

and the bracket on the second line is bounded below by
``kappa_N(i_a + 2) |hess u|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalPoint, DomainError, NonsmoothCoefficient
from .fields import (CRITICAL_TAU, Jet3, PolynomialField, RadialField, SmoothField,
                     derived_quantities)
from .orlicz import Coefficient, GrowthCoefficient, compute_indices

SHARP_THRESHOLD = 2.0 * (2.0 - math.sqrt(2.0))


def kappa(N: int, p: float) -> float:
    """Sharp constant ``kappa_N(p)``; ``N = 1`` and ``N >= 2`` have different branches."""
    if N < 1:
        raise DomainError("N must be at least 1")
    if not p >= 1:
        raise DomainError(f"kappa is defined for p >= 1, got {p}")
    if p >= 2:
        return 1.0
    if N == 1 or p >= 4.0 / 3.0:
        return (p - 1.0) ** 2
    return 1.0 - (4.0 - p) ** 2 / 8.0


def kappa_for(a: Coefficient, N: int) -> float:
    """``kappa_N(i_a + 2)`` using the closed-form lower index when available."""
    if a.analytic_indices is not None:
        ia = a.analytic_indices[0]
    else:
        ia = compute_indices(a).lower
    if ia < -1:
        raise DomainError(f"i_a = {ia} < -1")
    return kappa(N, ia + 2.0)


@dataclass(frozen=True)
class PointwiseReport:
    lhs: float
    div_term: float
    quad_term: float
    hess_term: float        # a(g)^2 |hess u|^2
    grad_norm: float

    @property
    def identity_residual(self) -> float:
        return self.lhs - self.div_term - self.quad_term

    @property
    def scale(self) -> float:
        return max(abs(self.lhs), abs(self.div_term), abs(self.quad_term), 1.0)

    @property
    def relative_residual(self) -> float:
        return abs(self.identity_residual) / self.scale

    def inequality_gap(self, kappa_value: float) -> float:
        return self.lhs - self.div_term - kappa_value * self.hess_term


def _coefficient_at(a: Coefficient, g: float) -> tuple[float, float]:
    with np.errstate(all="ignore"):
        av = float(a.eval(g))
        dv = float(a.deriv(g))
    if not math.isfinite(av):
        raise NonsmoothCoefficient(f"a is not finite at |grad u| = {g:g}")
    if not math.isfinite(dv):
        raise NonsmoothCoefficient(f"a' unavailable at |grad u| = {g:g}")
    return av, dv


def identity_terms(a: Coefficient, jet: Jet3, tau: float = CRITICAL_TAU) -> PointwiseReport:
    """Evaluate every term of the identity from a third-order jet.

    At a critical point the terms carrying ``a'`` or ``Q_a`` are taken as zero;
    this is only admissible when ``a`` is finite at 0 (e.g. regularised),
    otherwise :class:`CriticalPoint` is raised.
    """
    dq = derived_quantities(jet, tau)
    G, H, T = jet.grad, jet.hess, jet.third
    g = dq.grad_norm
    lap = dq.laplacian
    if dq.critical:
        if getattr(a, "singular_at_zero", True):
            raise CriticalPoint(f"|grad u| = {g:.3e}: coefficient is singular at 0")
        av = float(a.eval(g))
        ad = 0.0
        v = np.zeros(jet.grad.shape[1])
        normal = np.zeros(jet.grad.shape[0])
        q = 0.0
    else:
        av, ad = _coefficient_at(a, g)
        v = dq.grad_of_grad_norm
        normal = dq.normal_part
        q = g * ad / av

    # div(a(g) grad u^alpha) = a Lap u^alpha + a' grad u^alpha . grad g
    div_flux = av * lap + ad * (G @ v)
    lhs = float(div_flux @ div_flux)

    # bracket W_i = a^2 (sum_a Lap u^a d_i u^a - sum_{a,j} d_ij u^a d_j u^a)
    inner = lap @ G - np.einsum("aij,aj->i", H, G)
    grad_lap = np.einsum("akki->ai", T)
    div_inner = (np.sum(grad_lap * G) + np.sum(lap * np.einsum("aii->a", H))
                 - np.einsum("aiij,aj->", T, G) - np.sum(H * H))
    div_term = float(2.0 * av * ad * (v @ inner) + av * av * div_inner)

    hess_sq = dq.hess_norm_sq
    quad = av * av * (hess_sq + 2.0 * q * float(v @ v) + q * q * float(normal @ normal))
    return PointwiseReport(lhs, div_term, float(quad), av * av * hess_sq, g)


def evaluate_identity(a: Coefficient, u: SmoothField, x, tau: float = CRITICAL_TAU) -> PointwiseReport:
    return identity_terms(a, u.jet(x), tau)


def bracket_field(a: Coefficient, u: SmoothField, x) -> np.ndarray:
    """``a(|grad u|)^2 ((Lap u)^T grad u - grad |grad u|^2 / 2)`` at ``x``.

    Uses first and second derivatives only; differencing it gives an
    independent check of the divergence term.
    """
    j = u.jet(x)
    g = float(np.linalg.norm(j.grad))
    lap = np.trace(j.hess, axis1=1, axis2=2)
    av = float(a.eval(g))
    return av * av * (lap @ j.grad - np.einsum("aij,aj->i", j.hess, j.grad))


def flux_field(a: Coefficient, u: SmoothField, x) -> np.ndarray:
    """``a(|grad u|) grad u`` at ``x`` (first derivatives only)."""
    j = u.jet(x)
    g = float(np.linalg.norm(j.grad))
    return float(a.eval(g)) * j.grad


def fd_divergence(vector_field, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference divergence over the last axis of ``vector_field(x)``."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        total = total + (np.asarray(vector_field(x + e))[..., i]
                         - np.asarray(vector_field(x - e))[..., i]) / (2 * h)
    return total


def check_inequality(a: Coefficient, u: SmoothField, x, N: int | None = None,
                     tau: float = CRITICAL_TAU) -> float:
    """Gap ``lhs - div_term - kappa_N(i_a+2) a^2 |hess u|^2`` (non-negative in theory)."""
    N = u.dim_out if N is None else N
    rep = evaluate_identity(a, u, x, tau)
    return rep.inequality_gap(kappa_for(a, N))


def quadratic_form_ratio(rep: PointwiseReport) -> float:
    """``(lhs - div_term) / (a^2 |hess u|^2)``: the constant achieved at a point."""
    return (rep.lhs - rep.div_term) / rep.hess_term


# --------------------------------------------------------------------------
# extremal configurations


def extremal_configuration(p: float, n: int = 2, N: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """``(omegas, hs)`` attaining ``kappa_N(p)`` for ``p in [1, 4/3)``.

    With ``r0 = p / (2(2-p))``: ``omega^1 = sqrt(r0) e1``,
    ``omega^2 = sqrt(1-r0) e2``, ``H^1 = sqrt(2 r0/(1+r0)) e1 x e1`` and
    ``H^2 = sqrt((1-r0)/(1+r0)) (e1 x e2 + e2 x e1)/sqrt(2)``; the remaining
    components vanish.
    """
    if not (1.0 <= p < 4.0 / 3.0):
        raise DomainError("the two-component configuration covers p in [1, 4/3)")
    if n < 2 or N < 2:
        raise DomainError("needs n, N >= 2")
    r0 = p / (2.0 * (2.0 - p))
    t1, t2 = math.sqrt(r0), math.sqrt(1.0 - r0)
    h1, h2 = math.sqrt(2.0 * r0 / (1.0 + r0)), math.sqrt((1.0 - r0) / (1.0 + r0))
    omegas = np.zeros((N, n))
    hs = np.zeros((N, n, n))
    omegas[0, 0] = t1
    omegas[1, 1] = t2
    hs[0, 0, 0] = h1
    hs[1, 0, 1] = hs[1, 1, 0] = h2 / math.sqrt(2.0)
    return omegas, hs


def sharpness_witness(N: int, p: float, n: int = 2) -> tuple[SmoothField, np.ndarray, float]:
    """A field and point where ``kappa_N(p)`` is attained for ``a(t) = t^(p-2)``.

    Returns ``(field, point, achieved_ratio)``.
    """
    if not p >= 1:
        raise DomainError("p must be >= 1")
    if N < 1 or n < 2:
        raise DomainError("needs N >= 1 and n >= 2")
    if p >= 2:
        u: SmoothField = RadialField.modulus(n, N)
        x = np.zeros(n)
        x[:2] = (0.6, 0.8)
    elif N == 1 or p >= 4.0 / 3.0:
        comp = [((2,) + (0,) * (n - 1), 0.5)]
        u = PolynomialField(n, [comp] + [[] for _ in range(N - 1)])
        x = np.ones(n)
    else:
        omegas, hs = extremal_configuration(p, n, N)
        u = PolynomialField.quadratic(omegas, hs)
        x = np.zeros(n)
    rep = evaluate_identity(GrowthCoefficient.power(p), u, x)
    return u, x, quadratic_form_ratio(rep)


# --------------------------------------------------------------------------
# random sweeps


@dataclass(frozen=True)
class SweepRow:
    trial: int
    coefficient: str
    n: int
    N: int
    point: tuple
    residual: float
    gap: float


def sweep_coefficients(ps=(1.3, 1.5, 2.0, 3.0, 4.0), eps=(1e-2, 1.0)) -> list[Coefficient]:
    """Power coefficients and their regularisations."""
    from .orlicz import regularize

    base = [GrowthCoefficient.power(p) for p in ps]
    return base + [regularize(a, e) for a in base for e in eps]


def random_sweep(coefficients, trials: int, rng: np.random.Generator,
                 dims=(2, 3), degree: int = 3, min_grad: float = 1e-3,
                 N: int | None = None) -> list[SweepRow]:
    """Relative identity residual and relative inequality gap over random cubic fields.

    Each trial draws ``n`` and ``N`` from ``dims`` (unless ``N`` is fixed),
    a polynomial field with coefficients uniform in ``[-1, 1]`` and a point in
    ``[-1, 1]^n`` with ``|grad u| >= min_grad``; every coefficient is
    evaluated on the same jet.
    """
    kappas = {}
    rows = []
    for trial in range(trials):
        n = int(rng.choice(dims))
        NN = int(rng.choice(dims)) if N is None else N
        u = PolynomialField.random(n, NN, degree, rng)
        while True:
            x = rng.uniform(-1.0, 1.0, n)
            jet = u.jet(x)
            if np.linalg.norm(jet.grad) >= min_grad:
                break
        for a in coefficients:
            key = (id(a), NN)
            if key not in kappas:
                kappas[key] = kappa_for(a, NN)
            rep = identity_terms(a, jet)
            rows.append(SweepRow(trial, a.label, n, NN, tuple(float(v) for v in x),
                                 rep.relative_residual,
                                 rep.inequality_gap(kappas[key]) / rep.scale))
    return rows
