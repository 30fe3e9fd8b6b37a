"""Finite differences for ``-div(a_eps(|grad u|) grad u) = f`` on rectangles.

Unknowns live on the interior nodes of a uniform grid with homogeneous
Dirichlet data. The operator is discretised in conservative form: the full
gradient is formed at every edge midpoint (normal part by a two-point
difference, tangential part by averaging the central differences of the two
end nodes), the coefficient is evaluated at its modulus, and the divergence
at a node collects the normal fluxes through the four surrounding edges.

Newton's method uses the exact Jacobian of this edge flux (including the
rank-one ``a'`` term) with step halving on the residual norm, inside a
continuation ``eps = 2^0, 2^-1, ..., 2^-K``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContinuationAbort, DomainError, GeometryError, NewtonStall
from .orlicz import Coefficient, GrowthCoefficient, RegularizedCoefficient, regularize

log = logging.getLogger(__name__)

MIN_LOWER_INDEX = 2.0 * (1.0 - math.sqrt(2.0))


@dataclass(frozen=True)
class Grid2:
    """Uniform grid on ``[0, Lx] x [0, Ly]`` with ``mx x my`` interior nodes."""

    Lx: float
    Ly: float
    mx: int
    my: int

    def __post_init__(self):
        if self.mx < 1 or self.my < 1:
            raise DomainError("grid needs interior nodes")
        if abs(self.Lx / (self.mx + 1) - self.Ly / (self.my + 1)) > 1e-12:
            raise DomainError("grid spacing must agree on both axes")

    @classmethod
    def square(cls, nodes: int, L: float = 1.0) -> "Grid2":
        """``nodes`` points per side including both boundary nodes (33, 65, 129, ...)."""
        return cls(L, L, nodes - 2, nodes - 2)

    @property
    def h(self) -> float:
        return self.Lx / (self.mx + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.mx + 2, self.my + 2)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``X, Y`` with ``X[i, j] = i h``."""
        x = np.linspace(0.0, self.Lx, self.mx + 2)
        y = np.linspace(0.0, self.Ly, self.my + 2)
        return np.meshgrid(x, y, indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoidal node weights (node cells clipped to the rectangle)."""
        wx = np.full(self.mx + 2, self.h)
        wy = np.full(self.my + 2, self.h)
        wx[[0, -1]] *= 0.5
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)


class _Stencils:
    """Sparse maps from interior node values to edge gradients and back."""

    def __init__(self, grid: Grid2):
        mx, my, h = grid.mx, grid.my, grid.h
        nx, ny = grid.shape
        full = np.arange(nx * ny).reshape(nx, ny)
        interior = np.full(nx * ny, -1)
        interior[full[1:-1, 1:-1].ravel()] = np.arange(mx * my)
        self.n_unknowns = mx * my

        def op(rows_cols_vals, n_rows):
            r, c, v = (np.concatenate(z) for z in zip(*rows_cols_vals))
            keep = interior[c] >= 0
            return sp.csr_matrix((v[keep], (r[keep], interior[c[keep]])),
                                 shape=(n_rows, self.n_unknowns))

        # x-edges between (i, j) and (i+1, j), i = 0..mx, j = 1..my
        I, J = np.meshgrid(np.arange(mx + 1), np.arange(1, my + 1), indexing="ij")
        I, J = I.ravel(), J.ravel()
        rows = np.arange(I.size)
        one = np.ones(I.size)
        self.n_xedges = I.size
        self.xn = op([(rows, full[I + 1, J], one / h), (rows, full[I, J], -one / h)], I.size)
        q = one / (4 * h)
        self.xt = op([(rows, full[I, J + 1], q), (rows, full[I, J - 1], -q),
                      (rows, full[I + 1, J + 1], q), (rows, full[I + 1, J - 1], -q)], I.size)

        # y-edges between (i, j) and (i, j+1), i = 1..mx, j = 0..my
        I, J = np.meshgrid(np.arange(1, mx + 1), np.arange(my + 1), indexing="ij")
        I, J = I.ravel(), J.ravel()
        rows = np.arange(I.size)
        one = np.ones(I.size)
        q = one / (4 * h)
        self.n_yedges = I.size
        self.yn = op([(rows, full[I, J + 1], one / h), (rows, full[I, J], -one / h)], I.size)
        self.yt = op([(rows, full[I + 1, J], q), (rows, full[I - 1, J], -q),
                      (rows, full[I + 1, J + 1], q), (rows, full[I - 1, J + 1], -q)], I.size)

        # discrete divergence of normal edge fluxes = -(normal difference)^T
        self.sx = (-self.xn.T).tocsr()
        self.sy = (-self.yn.T).tocsr()


@dataclass
class DiscreteSolution:
    grid: Grid2
    u: np.ndarray                 # (N, mx+2, my+2) including zero boundary
    epsilon: float
    coefficient: Coefficient
    residual_norm: float
    trace: list[tuple[float, int, float]] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.u.shape[0]

    @property
    def flux(self) -> np.ndarray:
        """Node-centred ``a_eps(|grad_h u|) grad_h u``, shape ``(N, 2, mx+2, my+2)``."""
        return node_flux(self.coefficient, self.u, self.grid.h)


def node_gradient(u: np.ndarray, h: float) -> np.ndarray:
    """Central differences inside, second-order one-sided on the boundary."""
    gx = np.gradient(u, h, axis=-2, edge_order=2)
    gy = np.gradient(u, h, axis=-1, edge_order=2)
    return np.stack([gx, gy], axis=1)


def flux_coefficient(a: Coefficient, mod: np.ndarray) -> np.ndarray:
    """``a(mod)``, replaced by 0 where ``mod = 0`` (the flux ``a(t) t`` vanishes there)."""
    pos = mod > 0
    return np.where(pos, a.eval(np.where(pos, mod, 1.0)), 0.0)


def node_flux(a: Coefficient, u: np.ndarray, h: float) -> np.ndarray:
    G = node_gradient(u, h)
    mod = np.sqrt(np.sum(G ** 2, axis=(0, 1)))
    return flux_coefficient(a, mod)[None, None] * G


class Problem:
    """Residual and Jacobian of the discrete system for one coefficient."""

    def __init__(self, grid: Grid2, f: np.ndarray):
        self.grid = grid
        self.st = _Stencils(grid)
        f = np.asarray(f, dtype=float)
        if f.ndim == 2:
            f = f[None]
        if f.shape[1:] != grid.shape:
            raise DomainError(f"f has shape {f.shape[1:]}, grid needs {grid.shape}")
        self.N = f.shape[0]
        self.f_full = f
        self.f = f[:, 1:-1, 1:-1].reshape(self.N, -1)

    # -- packing --------------------------------------------------------

    def pack(self, u_full: np.ndarray) -> np.ndarray:
        return u_full[:, 1:-1, 1:-1].reshape(-1)

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        g = self.grid
        out = np.zeros((self.N, *g.shape))
        out[:, 1:-1, 1:-1] = vec.reshape(self.N, g.mx, g.my)
        return out

    # -- operator -------------------------------------------------------

    def edge_gradients(self, U: np.ndarray):
        st = self.st
        xn = np.stack([st.xn @ U[a] for a in range(self.N)])
        xt = np.stack([st.xt @ U[a] for a in range(self.N)])
        yn = np.stack([st.yn @ U[a] for a in range(self.N)])
        yt = np.stack([st.yt @ U[a] for a in range(self.N)])
        return xn, xt, yn, yt

    def divergence(self, a: Coefficient, vec: np.ndarray) -> np.ndarray:
        U = vec.reshape(self.N, -1)
        xn, xt, yn, yt = self.edge_gradients(U)
        ax = flux_coefficient(a, np.sqrt(np.sum(xn ** 2 + xt ** 2, axis=0)))
        ay = flux_coefficient(a, np.sqrt(np.sum(yn ** 2 + yt ** 2, axis=0)))
        return np.stack([self.st.sx @ (ax * xn[a_]) + self.st.sy @ (ay * yn[a_])
                         for a_ in range(self.N)])

    def residual(self, a: Coefficient, vec: np.ndarray) -> np.ndarray:
        return (self.f + self.divergence(a, vec)).reshape(-1)

    def jacobian(self, a: Coefficient, vec: np.ndarray) -> sp.csr_matrix:
        st = self.st
        U = vec.reshape(self.N, -1)
        xn, xt, yn, yt = self.edge_gradients(U)
        mx_ = np.sqrt(np.sum(xn ** 2 + xt ** 2, axis=0))
        my_ = np.sqrt(np.sum(yn ** 2 + yt ** 2, axis=0))
        ax, cx = a.eval(mx_), a.deriv_over_t(mx_)
        ay, cy = a.eval(my_), a.deriv_over_t(my_)
        D = sp.diags
        blocks = []
        for al in range(self.N):
            row = []
            for be in range(self.N):
                bx = D(cx * xn[al] * xn[be]) @ st.xn + D(cx * xn[al] * xt[be]) @ st.xt
                by = D(cy * yn[al] * yn[be]) @ st.yn + D(cy * yn[al] * yt[be]) @ st.yt
                if al == be:
                    bx = bx + D(ax) @ st.xn
                    by = by + D(ay) @ st.yn
                row.append(st.sx @ bx + st.sy @ by)
            blocks.append(row)
        return sp.bmat(blocks, format="csc")

    def norm(self, r: np.ndarray) -> float:
        """Discrete L2 norm ``(h^2 sum r^2)^{1/2}`` of an interior vector."""
        return float(self.grid.h * np.linalg.norm(r))


def assemble_residual(u: np.ndarray, a: Coefficient, f: np.ndarray, grid: Grid2) -> np.ndarray:
    """Node field ``f + div_h(a(|grad_h u|) grad_h u)``, zero on the boundary."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 2:
        u = u[None]
    problem = Problem(grid, f)
    if u.shape[0] != problem.N:
        raise DomainError("u and f have different component counts")
    return problem.unpack(problem.residual(a, problem.pack(u)))


def newton(problem: Problem, a: Coefficient, vec: np.ndarray, tol: float,
           max_newton: int = 50, max_halvings: int = 30) -> tuple[np.ndarray, int, float]:
    """Damped Newton; each accepted step strictly lowers the residual norm."""
    r = problem.residual(a, vec)
    rn = problem.norm(r)
    for it in range(max_newton + 1):
        if rn <= tol:
            return vec, it, rn
        if it == max_newton:
            break
        J = problem.jacobian(a, vec)
        step = spla.spsolve(J, -r)
        if not np.all(np.isfinite(step)):
            raise NewtonStall("linear solve produced non-finite values")
        lam = 1.0
        for _ in range(max_halvings):
            trial = vec + lam * step
            rt = problem.residual(a, trial)
            rtn = problem.norm(rt)
            if np.isfinite(rtn) and rtn < rn:
                break
            lam *= 0.5
        else:
            raise NewtonStall(f"line search failed {max_halvings} times at |r| = {rn:.3e}")
        vec, r, rn = trial, rt, rtn
    raise ContinuationAbort(f"Newton did not reach {tol:g} in {max_newton} steps (|r| = {rn:.3e})")


def epsilon_schedule(k_max: int) -> list[float]:
    return [2.0 ** -k for k in range(k_max + 1)]


def solve(a: GrowthCoefficient, f: np.ndarray, grid: Grid2,
          eps_schedule: Sequence[float] | None = None, tol: float = 1e-10,
          max_newton: int = 50, u0: np.ndarray | None = None) -> DiscreteSolution:
    """Regularised Dirichlet solve with warm-started continuation in ``eps``.

    ``f`` holds node values of shape ``(N, mx+2, my+2)`` (or a single
    component). Every stage is driven to ``residual <= tol``.
    """
    if a.analytic_indices is not None:
        ia, sa = a.analytic_indices
        if not ia > MIN_LOWER_INDEX:
            raise DomainError(f"i_a = {ia} must exceed 2(1 - sqrt 2)")
        if not math.isfinite(sa):
            raise DomainError("s_a must be finite")
    eps_schedule = epsilon_schedule(12) if eps_schedule is None else list(eps_schedule)
    if not eps_schedule or min(eps_schedule) <= 0:
        raise DomainError("eps schedule must be non-empty and positive")
    problem = Problem(grid, f)
    vec = np.zeros(problem.N * grid.mx * grid.my) if u0 is None else problem.pack(u0)
    trace = []
    rn = math.nan
    ae = None
    for eps in eps_schedule:
        ae = regularize(a, eps)
        try:
            vec, its, rn = newton(problem, ae, vec, tol, max_newton)
        except ContinuationAbort as exc:
            raise ContinuationAbort(f"stage eps={eps:g}: {exc}") from exc
        log.debug("eps=%g newton=%d residual=%.3e", eps, its, rn)
        trace.append((eps, its, rn))
    return DiscreteSolution(grid, problem.unpack(vec), eps_schedule[-1], ae, rn, trace)


# --------------------------------------------------------------------------
# post-processing


@dataclass(frozen=True)
class NormReport:
    l2_f: float
    l1_f: float
    l2_flux: float
    l2_grad_flux: float
    l1_flux: float

    @property
    def w12_flux(self) -> float:
        return self.l2_flux + self.l2_grad_flux

    @property
    def ratios(self) -> dict[str, float]:
        def div(a, b):
            return a / b if b > 0 else (0.0 if a == 0 else math.inf)
        return {"w12_flux/l2_f": div(self.w12_flux, self.l2_f),
                "l1_flux/l1_f": div(self.l1_flux, self.l1_f)}


def _pointwise_norm(v: np.ndarray, n_lead: int) -> np.ndarray:
    return np.sqrt(np.sum(v ** 2, axis=tuple(range(n_lead))))


def norms(sol: DiscreteSolution, f: np.ndarray, mask: np.ndarray | None = None) -> NormReport:
    """Discrete L1/L2 norms of ``f``, of the flux and of its gradient."""
    g = sol.grid
    w = g.weights()
    if mask is not None:
        w = w * mask
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        f = f[None]
    F = sol.flux
    dF = np.stack([np.gradient(F, g.h, axis=-2, edge_order=2),
                   np.gradient(F, g.h, axis=-1, edge_order=2)], axis=2)
    fa = _pointwise_norm(f, 1)
    Fa = _pointwise_norm(F, 2)
    dFa = _pointwise_norm(dF, 3)
    return NormReport(
        l2_f=float(np.sqrt(np.sum(w * fa ** 2))),
        l1_f=float(np.sum(w * fa)),
        l2_flux=float(np.sqrt(np.sum(w * Fa ** 2))),
        l2_grad_flux=float(np.sqrt(np.sum(w * dFa ** 2))),
        l1_flux=float(np.sum(w * Fa)),
    )


@dataclass(frozen=True)
class LocalEstimate:
    lhs: float
    rhs: float
    c_fit: float
    passed: bool


def ball_mask(grid: Grid2, center: Sequence[float], radius: float) -> np.ndarray:
    X, Y = grid.coordinates()
    return ((X - center[0]) ** 2 + (Y - center[1]) ** 2 <= radius ** 2).astype(float)


def local_estimate_check(sol: DiscreteSolution, f: np.ndarray, center: Sequence[float],
                         R: float) -> LocalEstimate:
    """Both sides of the interior estimate on ``B_R`` / ``B_2R`` and their ratio."""
    g = sol.grid
    cx, cy = center
    if cx - 2 * R < 0 or cx + 2 * R > g.Lx or cy - 2 * R < 0 or cy + 2 * R > g.Ly:
        raise GeometryError("B_2R leaves the rectangle")
    inner = ball_mask(g, center, R)
    outer = ball_mask(g, center, 2 * R)
    if not inner.any():
        raise GeometryError("no grid node inside B_R")
    n = 2
    a = norms(sol, f, inner)
    b = norms(sol, f, outer)
    lhs = a.l2_flux / R + a.l2_grad_flux
    rhs = b.l2_f + R ** (-n / 2 - 1) * b.l1_flux
    if rhs == 0.0:
        return LocalEstimate(lhs, rhs, 0.0 if lhs == 0 else math.inf, lhs == 0)
    c = lhs / rhs
    return LocalEstimate(lhs, rhs, c, math.isfinite(c))


def hessian_ratio(sol: DiscreteSolution) -> float:
    """``||hess_h u|| / ||Lap_h u||`` over interior nodes (central second differences)."""
    u, h = sol.u, sol.grid.h
    uxx = (u[:, 2:, 1:-1] - 2 * u[:, 1:-1, 1:-1] + u[:, :-2, 1:-1]) / h ** 2
    uyy = (u[:, 1:-1, 2:] - 2 * u[:, 1:-1, 1:-1] + u[:, 1:-1, :-2]) / h ** 2
    uxy = (u[:, 2:, 2:] - u[:, 2:, :-2] - u[:, :-2, 2:] + u[:, :-2, :-2]) / (4 * h * h)
    hess = np.sum(uxx ** 2 + uyy ** 2 + 2 * uxy ** 2)
    lap = np.sum((uxx + uyy) ** 2)
    return float(np.sqrt(hess / lap)) if lap > 0 else 0.0


def energy(sol: DiscreteSolution, base: GrowthCoefficient | None = None) -> float:
    """``int B(|grad_h u|)`` by the trapezoidal rule, ``B`` built from ``base``."""
    from .orlicz import YoungPair

    a = base if base is not None else (
        sol.coefficient.base if isinstance(sol.coefficient, RegularizedCoefficient)
        else sol.coefficient)
    pair = YoungPair(a)
    G = node_gradient(sol.u, sol.grid.h)
    mod = np.sqrt(np.sum(G ** 2, axis=(0, 1)))
    return float(np.sum(sol.grid.weights() * pair.B(mod)))


def energy_pairing(problem: Problem, sol: DiscreteSolution) -> tuple[float, float]:
    """``(sum_edges h^2 G_n . a G_n, sum_nodes h^2 f . u)``; equal at convergence."""
    vec = problem.pack(sol.u)
    U = vec.reshape(problem.N, -1)
    xn, xt, yn, yt = problem.edge_gradients(U)
    a = sol.coefficient
    ax = flux_coefficient(a, np.sqrt(np.sum(xn ** 2 + xt ** 2, axis=0)))
    ay = flux_coefficient(a, np.sqrt(np.sum(yn ** 2 + yt ** 2, axis=0)))
    h2 = problem.grid.h ** 2
    edge = h2 * float(np.sum(ax * xn ** 2) + np.sum(ay * yn ** 2))
    node = h2 * float(np.sum(problem.f * U))
    return edge, node


# --------------------------------------------------------------------------
# manufactured data


def sine_bump(grid: Grid2) -> np.ndarray:
    X, Y = grid.coordinates()
    return np.sin(math.pi * X / grid.Lx) * np.sin(math.pi * Y / grid.Ly)


def rhs_named(name: str, grid: Grid2, N: int = 1) -> np.ndarray:
    """Named right-hand sides used by the experiments."""
    X, Y = grid.coordinates()
    s = sine_bump(grid)
    if name == "sine":
        out = [2 * math.pi ** 2 * s] + [np.zeros_like(s)] * (N - 1)
    elif name == "sine_xy":
        out = [s, X * Y] + [np.zeros_like(s)] * (N - 2)
    elif name == "ones":
        out = [np.ones_like(s)] * N
    elif name == "zero":
        out = [np.zeros_like(s)] * N
    else:
        raise DomainError(f"unknown right-hand side {name!r}")
    return np.stack(out[:N])


def manufactured_rhs(a: Coefficient, u_field, grid: Grid2) -> np.ndarray:
    """``f = -div(a(|grad u|) grad u)`` at every node from the exact jets of ``u``."""
    from .fields import derived_quantities

    X, Y = grid.coordinates()
    out = np.zeros((u_field.dim_out, *grid.shape))
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            jet = u_field.jet((X[i, j], Y[i, j]))
            dq = derived_quantities(jet)
            g = dq.grad_norm
            av = float(a.eval(g))
            if dq.critical:
                out[:, i, j] = -av * dq.laplacian
            else:
                out[:, i, j] = -(av * dq.laplacian
                                 + float(a.deriv(g)) * (jet.grad @ dq.grad_of_grad_norm))
    return out


def sample_field(u_field, grid: Grid2) -> np.ndarray:
    X, Y = grid.coordinates()
    out = np.zeros((u_field.dim_out, *grid.shape))
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            out[:, i, j] = u_field.value((X[i, j], Y[i, j]))
    return out
