"""Smooth vector fields ``u : R^n -> R^N`` and their third-order jets.

Three kinds are supported:

* :class:`PolynomialField` -- a coefficient table, differentiated exactly;
* :class:`RadialField` -- components ``phi(|x|)`` given with ``phi', phi'', phi'''``;
* :class:`ClosureField` -- a black-box closure differentiated by nested dual
  numbers (see :mod:`uhlenbeck.dual`).

Gradients follow the row convention: ``grad[alpha]`` is the gradient of the
component ``u^alpha``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import dual
from .errors import CriticalPoint, SingularPoint

CRITICAL_TAU = 1e-8


@dataclass(frozen=True)
class Jet3:
    """Value and derivatives up to order three at one point."""

    value: np.ndarray   # (N,)
    grad: np.ndarray    # (N, n)
    hess: np.ndarray    # (N, n, n)
    third: np.ndarray   # (N, n, n, n)

    def __add__(self, other: "Jet3") -> "Jet3":
        return Jet3(self.value + other.value, self.grad + other.grad,
                    self.hess + other.hess, self.third + other.third)

    def scaled(self, c: float) -> "Jet3":
        return Jet3(c * self.value, c * self.grad, c * self.hess, c * self.third)

    def symmetry_defect(self) -> float:
        h = np.max(np.abs(self.hess - self.hess.transpose(0, 2, 1)), initial=0.0)
        t = 0.0
        for perm in itertools.permutations((1, 2, 3)):
            t = max(t, float(np.max(np.abs(self.third - self.third.transpose(0, *perm)),
                                    initial=0.0)))
        return max(float(h), t)


def _fill_symmetric(N, n, entries):
    """Assemble symmetric tensors from a dict keyed by sorted index tuples."""
    grad = np.zeros((N, n))
    hess = np.zeros((N, n, n))
    third = np.zeros((N, n, n, n))
    for key, val in entries.items():
        if len(key) == 1:
            grad[:, key[0]] = val
        elif len(key) == 2:
            for i, j in set(itertools.permutations(key)):
                hess[:, i, j] = val
        else:
            for i, j, k in set(itertools.permutations(key)):
                third[:, i, j, k] = val
    return grad, hess, third


class SmoothField:
    dim_in: int
    dim_out: int
    kind: str

    def jet(self, x) -> Jet3:
        raise NotImplementedError

    def value(self, x) -> np.ndarray:
        return self.jet(x).value


# --------------------------------------------------------------------------
# polynomial fields


class PolynomialField(SmoothField):
    """``u^alpha(x) = sum_m c_m x^{e_m}`` for each component.

    ``components`` is a list (length N) of lists of ``(exponents, coeff)``.
    """

    kind = "polynomial"

    def __init__(self, dim_in: int, components: Sequence[Sequence[tuple[Sequence[int], float]]]):
        self.dim_in = int(dim_in)
        self.dim_out = len(components)
        self._exps = []
        self._coefs = []
        for terms in components:
            exps = np.array([list(e) for e, _ in terms], dtype=int).reshape(-1, self.dim_in)
            coefs = np.array([c for _, c in terms], dtype=float)
            if np.any(exps < 0):
                raise ValueError("negative exponent")
            self._exps.append(exps)
            self._coefs.append(coefs)

    @property
    def degree(self) -> int:
        return max((int(e.sum(axis=1).max()) for e in self._exps if len(e)), default=0)

    def components(self):
        return [[(tuple(int(v) for v in e), float(c)) for e, c in zip(E, C)]
                for E, C in zip(self._exps, self._coefs)]

    def _derivative(self, counts: np.ndarray, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim_out)
        for a, (E, C) in enumerate(zip(self._exps, self._coefs)):
            if not len(C):
                continue
            rem = E - counts
            ok = np.all(rem >= 0, axis=1)
            if not ok.any():
                continue
            E, C, rem = E[ok], C[ok], rem[ok]
            fac = np.ones(len(C))
            for d in range(self.dim_in):
                for s in range(counts[d]):
                    fac *= E[:, d] - s
            out[a] = np.sum(C * fac * np.prod(x ** rem, axis=1))
        return out

    def jet(self, x) -> Jet3:
        x = np.asarray(x, dtype=float)
        n = self.dim_in
        entries = {}
        for order in (1, 2, 3):
            for key in itertools.combinations_with_replacement(range(n), order):
                counts = np.bincount(key, minlength=n)
                entries[key] = self._derivative(counts, x)
        grad, hess, third = _fill_symmetric(self.dim_out, n, entries)
        return Jet3(self._derivative(np.zeros(n, dtype=int), x), grad, hess, third)

    def __add__(self, other: "PolynomialField") -> "PolynomialField":
        if other.dim_in != self.dim_in or other.dim_out != self.dim_out:
            raise ValueError("dimension mismatch")
        return PolynomialField(self.dim_in, [a + b for a, b in
                                             zip(self.components(), other.components())])

    def scaled(self, c: float) -> "PolynomialField":
        return PolynomialField(self.dim_in, [[(e, c * v) for e, v in comp]
                                             for comp in self.components()])

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> str:
        table = {str(a): [{"exponents": list(e), "coeff": c} for e, c in comp]
                 for a, comp in enumerate(self.components())}
        return json.dumps({"dim_in": self.dim_in, "components": table}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str | dict) -> "PolynomialField":
        data = json.loads(text) if isinstance(text, str) else text
        table = data["components"]
        keys = sorted(table, key=int)
        comps = [[(tuple(t["exponents"]), float(t["coeff"])) for t in table[k]] for k in keys]
        dim_in = data.get("dim_in") or len(comps[0][0][0])
        return cls(dim_in, comps)

    # -- constructors -------------------------------------------------------

    @classmethod
    def random(cls, n: int, N: int, degree: int, rng: np.random.Generator,
               low: float = -1.0, high: float = 1.0) -> "PolynomialField":
        """All monomials of total degree ``<= degree`` with uniform coefficients."""
        monos = [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree]
        return cls(n, [[(e, float(rng.uniform(low, high))) for e in monos] for _ in range(N)])

    @classmethod
    def quadratic(cls, omegas: np.ndarray, hs: np.ndarray) -> "PolynomialField":
        """``u^alpha(x) = omega^alpha . x + x . H^alpha x / 2``."""
        omegas = np.asarray(omegas, dtype=float)
        hs = np.asarray(hs, dtype=float)
        N, n = omegas.shape
        comps = []
        for a in range(N):
            terms = []
            for i in range(n):
                e = [0] * n
                e[i] = 1
                terms.append((tuple(e), omegas[a, i]))
            for i in range(n):
                for j in range(i, n):
                    e = [0] * n
                    e[i] += 1
                    e[j] += 1
                    terms.append((tuple(e), hs[a, i, j] * (0.5 if i == j else 1.0)))
            comps.append(terms)
        return cls(n, comps)


# --------------------------------------------------------------------------
# radial fields


class RadialField(SmoothField):
    """Components ``u^alpha(x) = phi_alpha(|x|)``.

    ``profiles[alpha]`` is either ``None`` (zero component) or a tuple
    ``(phi, phi', phi'', phi''')`` of scalar callables.
    """

    kind = "radial"

    def __init__(self, dim_in: int, profiles: Sequence[tuple[Callable, ...] | None]):
        self.dim_in = int(dim_in)
        self.dim_out = len(profiles)
        self.profiles = list(profiles)

    @classmethod
    def modulus(cls, n: int, N: int) -> "RadialField":
        """``u(x) = (|x|, 0, ..., 0)``."""
        prof = (lambda r: r, lambda r: 1.0, lambda r: 0.0, lambda r: 0.0)
        return cls(n, [prof] + [None] * (N - 1))

    def jet(self, x) -> Jet3:
        x = np.asarray(x, dtype=float)
        n, N = self.dim_in, self.dim_out
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise SingularPoint("radial field is not differentiable at the origin")
        w = x / r
        P = np.eye(n) - np.outer(w, w)
        value = np.zeros(N)
        grad = np.zeros((N, n))
        hess = np.zeros((N, n, n))
        third = np.zeros((N, n, n, n))
        sym3 = (np.einsum("ik,j->ijk", P, w) + np.einsum("jk,i->ijk", P, w)
                + np.einsum("ij,k->ijk", P, w))
        www = np.einsum("i,j,k->ijk", w, w, w)
        for a, prof in enumerate(self.profiles):
            if prof is None:
                continue
            f0, f1, f2, f3 = (float(g(r)) for g in prof)
            value[a] = f0
            grad[a] = f1 * w
            hess[a] = f2 * np.outer(w, w) + (f1 / r) * P
            third[a] = f3 * www + ((f2 - f1 / r) / r) * sym3
        return Jet3(value, grad, hess, third)


# --------------------------------------------------------------------------
# closures


class ClosureField(SmoothField):
    """A black-box ``func(x) -> sequence of N scalars``.

    ``func`` receives a list of scalars and must use the arithmetic operators
    and the functions of :mod:`uhlenbeck.dual` so that it can be evaluated on
    nested dual numbers.
    """

    kind = "closure"

    def __init__(self, dim_in: int, dim_out: int, func: Callable):
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.func = func

    def __add__(self, other: SmoothField) -> "ClosureField":
        if not isinstance(other, ClosureField):
            return NotImplemented
        f, g = self.func, other.func
        return ClosureField(self.dim_in, self.dim_out,
                            lambda x: [a + b for a, b in zip(f(x), g(x))])

    def value(self, x) -> np.ndarray:
        return np.array([float(v) for v in self.func([float(v) for v in x])])

    def jet(self, x) -> Jet3:
        x = [float(v) for v in np.asarray(x, dtype=float)]
        n, N = self.dim_in, self.dim_out
        entries: dict[tuple, np.ndarray] = {}
        value = None
        for i, j, k in itertools.combinations_with_replacement(range(n), 3):
            args = []
            for m in range(n):
                lvl1 = dual.Dual(x[m], 1.0 if m == i else 0.0)
                lvl2 = dual.Dual(lvl1, dual.Dual(1.0 if m == j else 0.0, 0.0))
                lvl3 = dual.Dual(lvl2, dual.Dual(dual.Dual(1.0 if m == k else 0.0, 0.0),
                                                 dual.Dual(0.0, 0.0)))
                args.append(lvl3)
            out = self.func(args)
            vals = [_unpack3(o) for o in out]
            if value is None:
                value = np.array([v[0] for v in vals])
            entries[(i,)] = np.array([v[1] for v in vals])
            entries[(j,)] = np.array([v[2] for v in vals])
            entries[(k,)] = np.array([v[4] for v in vals])
            entries[tuple(sorted((i, j)))] = np.array([v[3] for v in vals])
            entries[tuple(sorted((i, k)))] = np.array([v[5] for v in vals])
            entries[tuple(sorted((j, k)))] = np.array([v[6] for v in vals])
            entries[(i, j, k)] = np.array([v[7] for v in vals])
        grad, hess, third = _fill_symmetric(N, n, entries)
        return Jet3(value, grad, hess, third)


def _part(d, attr):
    return getattr(d, attr) if isinstance(d, dual.Dual) else (d if attr == "re" else 0.0)


def _unpack3(d):
    """Split a three-level dual into its eight coefficients.

    Order: f, f_i, f_j, f_ij, f_k, f_ik, f_jk, f_ijk.
    """
    lo, hi = _part(d, "re"), _part(d, "du")
    out = []
    for half in (lo, hi):
        a, b = _part(half, "re"), _part(half, "du")
        out.extend([float(_part(a, "re")), float(_part(a, "du")),
                    float(_part(b, "re")), float(_part(b, "du"))])
    return out


# --------------------------------------------------------------------------
# derived quantities


class DerivedQuantities:
    """Quantities of the pointwise identity computed from a jet.

    Normalised quantities raise :class:`CriticalPoint` when ``|grad u| < tau``.
    """

    def __init__(self, jet: Jet3, tau: float = CRITICAL_TAU):
        self.jet = jet
        self.tau = tau
        self.grad_norm = float(np.linalg.norm(jet.grad))
        self.laplacian = np.trace(jet.hess, axis1=1, axis2=2)
        self.hess_norm_sq = float(np.sum(jet.hess ** 2))

    @property
    def critical(self) -> bool:
        return self.grad_norm < self.tau

    def _guard(self):
        if self.critical:
            raise CriticalPoint(f"|grad u| = {self.grad_norm:.3e} below tau = {self.tau:g}")

    @property
    def grad_of_grad_norm(self) -> np.ndarray:
        """``grad |grad u| = sum_alpha hess^alpha grad u^alpha / |grad u|``."""
        self._guard()
        return np.einsum("aj,aji->i", self.jet.grad, self.jet.hess) / self.grad_norm

    @property
    def normal_part(self) -> np.ndarray:
        """``(grad u / |grad u|) (grad |grad u|)^T`` in ``R^N``."""
        return self.jet.grad @ self.grad_of_grad_norm / self.grad_norm


def derived_quantities(j: Jet3, tau: float = CRITICAL_TAU) -> DerivedQuantities:
    return DerivedQuantities(j, tau)
