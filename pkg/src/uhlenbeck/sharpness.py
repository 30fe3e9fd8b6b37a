"""Maximisation of ``D = J - delta J0 - sigma J1`` over constrained configurations.

A configuration is ``N`` vectors ``omega^alpha in R^n`` with
``sum |omega^alpha|^2 <= 1`` and ``N`` symmetric matrices ``H^alpha`` with
``sum |H^alpha|^2 = 1``. With ``zeta = sum H^alpha omega^alpha``:

    J = |zeta|^2,   J0 = sum_alpha (omega^alpha . zeta)^2,   J1 = sum |H^alpha|^2.

Arrays carry an optional leading batch axis so that many restarts are
advanced together.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation, DomainError, SingularOmega

PROJECTION_TOL = 1e-12


@dataclass(frozen=True)
class SharpnessConfig:
    omegas: np.ndarray   # (N, n)
    hs: np.ndarray       # (N, n, n)

    @property
    def N(self) -> int:
        return self.omegas.shape[0]

    @property
    def n(self) -> int:
        return self.omegas.shape[1]

    def validate(self, tol: float = PROJECTION_TOL) -> None:
        if float(np.sum(self.omegas ** 2)) > 1.0 + tol:
            raise ConstraintViolation("sum |omega|^2 exceeds 1")
        if abs(float(np.sum(self.hs ** 2)) - 1.0) > tol:
            raise ConstraintViolation("sum |H|^2 differs from 1")
        if np.max(np.abs(self.hs - self.hs.transpose(0, 2, 1))) > tol:
            raise ConstraintViolation("H is not symmetric")


def functionals(omegas: np.ndarray, hs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(J, J0, J1)`` for a single configuration or a batch."""
    zeta = np.einsum("...aij,...aj->...i", hs, omegas)
    J = np.sum(zeta ** 2, axis=-1)
    J0 = np.sum(np.einsum("...ai,...i->...a", omegas, zeta) ** 2, axis=-1)
    J1 = np.sum(hs ** 2, axis=(-3, -2, -1))
    return J, J0, J1


def evaluate(config: SharpnessConfig, delta: float, sigma: float,
             check: bool = True) -> tuple[float, float, float, float]:
    """``(J, J0, J1, D)``."""
    if check:
        config.validate()
    J, J0, J1 = functionals(config.omegas, config.hs)
    return float(J), float(J0), float(J1), float(J - delta * J0 - sigma * J1)


def analytic_bound(delta: float, sigma: float) -> float:
    """Upper bound for ``D``: 0 for ``delta <= 1/3``, else ``max(0, (delta+1)^2/(8 delta) - sigma)``."""
    if not (0.0 <= delta <= 0.5):
        raise DomainError(f"delta={delta} outside [0, 1/2]")
    if delta + sigma < 1.0 - 1e-15:
        raise DomainError(f"delta + sigma = {delta + sigma} < 1")
    if delta <= 1.0 / 3.0:
        return 0.0
    return max(0.0, (delta + 1.0) ** 2 / (8.0 * delta) - sigma)


def psi(r, delta: float, sigma: float):
    return 0.5 * (1.0 + r) * (1.0 - delta * r) - sigma


def psi_profile(delta: float, sigma: float) -> tuple[float, float]:
    """Maximiser and maximum of ``psi(r) = (1+r)(1-delta r)/2 - sigma`` on ``[0, 1]``."""
    if not (0.0 <= delta <= 0.5):
        raise DomainError(f"delta={delta} outside [0, 1/2]")
    r = 1.0 if delta <= 1.0 / 3.0 else (1.0 - delta) / (2.0 * delta)
    return r, float(psi(r, delta, sigma))


# --------------------------------------------------------------------------
# search


def _symmetrize(hs):
    return 0.5 * (hs + np.swapaxes(hs, -1, -2))


def project(omegas: np.ndarray, hs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrise and normalise the H-block; pull omegas back into the unit ball."""
    hs = _symmetrize(hs)
    hn = np.sqrt(np.sum(hs ** 2, axis=(-3, -2, -1), keepdims=True))
    hs = hs / np.where(hn > 0, hn, 1.0)
    on = np.sqrt(np.sum(omegas ** 2, axis=(-2, -1), keepdims=True))
    omegas = np.where(on > 1.0, omegas / np.where(on > 0, on, 1.0), omegas)
    return omegas, hs


def gradients(omegas, hs, delta, sigma):
    """Euclidean gradient of ``D`` with respect to ``omegas`` and ``hs``."""
    zeta = np.einsum("...aij,...aj->...i", hs, omegas)
    c = np.einsum("...ai,...i->...a", omegas, zeta)
    v = np.einsum("...a,...ai->...i", c, omegas)
    # dJ/domega^a = 2 H^a zeta ; dJ0/domega^a = 2 c_a zeta + 2 H^a v
    g_om = (2.0 * np.einsum("...aij,...j->...ai", hs, zeta)
            - delta * (2.0 * c[..., None] * zeta[..., None, :]
                       + 2.0 * np.einsum("...aij,...j->...ai", hs, v)))
    # dJ/dH^a = 2 sym(zeta x omega^a) ; dJ0/dH^a = 2 sym(v x omega^a)
    outer = np.einsum("...i,...aj->...aij", zeta - delta * v, omegas)
    g_h = 2.0 * _symmetrize(outer) - 2.0 * sigma * hs
    return g_om, g_h


def random_configs(rng: np.random.Generator, count: int, n: int, N: int):
    omegas = rng.standard_normal((count, N, n))
    radius = rng.uniform(0.0, 1.0, (count, 1, 1)) ** (1.0 / (N * n))
    omegas *= radius / np.linalg.norm(omegas.reshape(count, -1), axis=1)[:, None, None]
    hs = rng.standard_normal((count, N, n, n))
    return project(omegas, hs)


@dataclass
class SearchResult:
    best_config: SharpnessConfig
    best_D: float
    top: list[tuple[float, SharpnessConfig]]
    restarts: int
    iterations: int


def global_search(n: int, N: int, delta: float, sigma: float, restarts: int = 200,
                  iterations: int = 10_000, step: float = 1e-2,
                  rng: np.random.Generator | None = None, keep: int = 5) -> SearchResult:
    """Projected gradient ascent from ``restarts`` random starts, run as one batch."""
    if n < 2 or N < 2:
        raise DomainError("needs n, N >= 2")
    rng = np.random.default_rng(0) if rng is None else rng
    om, hs = random_configs(rng, restarts, n, N)
    best = np.full(restarts, -np.inf)
    best_om, best_hs = om.copy(), hs.copy()
    for it in range(iterations + 1):
        J, J0, J1 = functionals(om, hs)
        D = J - delta * J0 - sigma * J1
        better = D > best
        if better.any():
            best = np.where(better, D, best)
            best_om[better] = om[better]
            best_hs[better] = hs[better]
        if it == iterations:
            break
        g_om, g_h = gradients(om, hs, delta, sigma)
        om, hs = project(om + step * g_om, hs + step * g_h)
    order = np.argsort(-best)
    top = [(float(best[k]), SharpnessConfig(best_om[k].copy(), best_hs[k].copy()))
           for k in order[:keep]]
    return SearchResult(top[0][1], top[0][0], top, restarts, iterations)


def sampled_maximum(n: int, N: int, delta: float, sigma: float, samples: int,
                    rng: np.random.Generator) -> float:
    """Largest ``D`` over uniformly drawn constrained configurations."""
    out = -np.inf
    chunk = 20_000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        om, hs = random_configs(rng, m, n, N)
        J, J0, J1 = functionals(om, hs)
        out = max(out, float(np.max(J - delta * J0 - sigma * J1)))
        done += m
    return out


# --------------------------------------------------------------------------
# ellipsoid geometry


def ellipsoid_identity(omega: np.ndarray, H: np.ndarray) -> float:
    """Residual of ``|H w|^2 - (w.Hw)^2/2 - |H|^2/2 = -|H_perp|^2/2`` for unit ``w``."""
    omega = np.asarray(omega, dtype=float)
    H = np.asarray(H, dtype=float)
    if abs(float(np.linalg.norm(omega)) - 1.0) > 1e-10:
        raise DomainError("omega must be a unit vector")
    Hw = H @ omega
    proj = np.eye(len(omega)) - np.outer(omega, omega)
    Hp = proj @ H @ proj
    lhs = Hw @ Hw - 0.5 * (omega @ Hw) ** 2 - 0.5 * np.sum(H * H)
    return float(lhs + 0.5 * np.sum(Hp * Hp))


def ellipsoid_matrix(omega: np.ndarray) -> np.ndarray:
    """``W(w) = (|w|^2 I + w x w) / 2``."""
    omega = np.asarray(omega, dtype=float)
    return 0.5 * (omega @ omega * np.eye(len(omega)) + np.outer(omega, omega))


def ellipsoid_membership(omega: np.ndarray, H: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``H w . W(w)^{-1} H w <= |H|^2`` (trivially true for ``w = 0``)."""
    omega = np.asarray(omega, dtype=float)
    H = np.asarray(H, dtype=float)
    nrm = float(np.linalg.norm(omega))
    if nrm == 0.0:
        return bool(np.allclose(H @ omega, 0.0))
    w = omega / nrm
    Hw = H @ w
    # for a unit vector W^{-1} = 2I - w x w; the scaling of omega cancels
    quad = 2.0 * (Hw @ Hw) - (w @ Hw) ** 2
    return bool(quad <= np.sum(H * H) * (1.0 + tol) + tol)


def ellipsoid_preimage(omega: np.ndarray, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetric ``H`` with ``|H| <= 1`` and ``H w = x`` for ``x`` in the ellipsoid.

    ``w`` is normalised; decompose ``x = t w + s w_perp`` and return
    ``t w x w + s (w_perp x w + w x w_perp)``.
    """
    omega = np.asarray(omega, dtype=float)
    x = np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(omega))
    if nrm == 0.0:
        raise SingularOmega("omega = 0 has no preimage construction")
    w = omega / nrm
    t = float(x @ w)
    rest = x - t * w
    s = float(np.linalg.norm(rest))
    if s > 0:
        wp = rest / s
    else:
        wp = np.zeros_like(w)
        k = int(np.argmin(np.abs(w)))
        wp[k] = 1.0
        wp -= (wp @ w) * w
        wp /= np.linalg.norm(wp)
    if t * t + 2 * s * s > 1.0 + tol:
        raise DomainError("x lies outside the ellipsoid")
    return t * np.outer(w, w) + s * (np.outer(wp, w) + np.outer(w, wp))


def delta_sigma_for(p: float) -> tuple[float, float]:
    """The ``(delta, sigma)`` pair linked to the exponent ``p in [1, 2)``."""
    if not (1.0 <= p < 2.0):
        raise DomainError("p must lie in [1, 2)")
    delta = (2.0 - p) / 2.0
    sigma = p / 2.0 if p >= 4.0 / 3.0 else (delta + 1.0) ** 2 / (8.0 * delta)
    return delta, sigma
