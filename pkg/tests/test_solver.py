import math

import numpy as np
import pytest

from uhlenbeck.errors import DomainError, GeometryError
from uhlenbeck.fields import ClosureField
from uhlenbeck.orlicz import GrowthCoefficient, regularize
from uhlenbeck.solver import (Grid2, Problem, assemble_residual, energy, energy_pairing,
                              epsilon_schedule, hessian_ratio, local_estimate_check, manufactured_rhs,
                              node_flux, norms, rhs_named, sample_field, sine_bump, solve)

P2 = GrowthCoefficient.power(2)


def test_grid_conventions():
    g = Grid2.square(33)
    assert (g.mx, g.h, g.shape) == (31, 1 / 32, (33, 33))
    assert g.weights().sum() == pytest.approx(1.0)
    with pytest.raises(DomainError):
        Grid2(1.0, 2.0, 9, 9)
    Grid2(1.0, 2.0, 9, 19)


def test_zero_data():
    g = Grid2.square(17)
    f = rhs_named("zero", g, 2)
    assert not assemble_residual(np.zeros_like(f), GrowthCoefficient.power(1.5), f, g).any()
    sol = solve(GrowthCoefficient.power(1.5), f, g)
    assert not sol.u.any()
    rep = norms(sol, f)
    assert rep.l2_f == rep.l2_flux == rep.w12_flux == rep.l1_flux == 0
    est = local_estimate_check(sol, f, (0.5, 0.5), 0.2)
    assert est.lhs == est.rhs == 0 and est.passed


def test_jacobian_matches_difference(rng):
    g = Grid2.square(8)
    pr = Problem(g, rhs_named("sine_xy", g, 2))
    a = regularize(GrowthCoefficient.power(1.5), 0.1)
    v = rng.standard_normal(pr.N * g.mx * g.my)
    J = pr.jacobian(a, v).toarray()
    h = 1e-6
    fd = np.stack([(pr.residual(a, v + h * e) - pr.residual(a, v - h * e)) / (2 * h)
                   for e in np.eye(len(v))], axis=1)
    assert np.abs(J - fd).max() <= 1e-7 * np.abs(J).max()


def test_p2_residual_order():
    res = []
    for n in (17, 33, 65):
        g = Grid2.square(n)
        u = sine_bump(g)[None]
        res.append(g.h * np.linalg.norm(assemble_residual(u, P2, rhs_named("sine", g), g)))
    assert math.log2(res[0] / res[1]) > 1.9 and math.log2(res[1] / res[2]) > 1.9


def test_p3_manufactured_residual_order():
    a = GrowthCoefficient.power(3)
    bump = ClosureField(2, 1, lambda x: [16 * x[0] * (1 - x[0]) * x[1] * (1 - x[1])])
    res = []
    for n in (17, 33, 65):
        g = Grid2.square(n)
        r = assemble_residual(sample_field(bump, g), a, manufactured_rhs(a, bump, g), g)
        res.append(g.h * np.linalg.norm(r))
    assert res[0] > res[1] > res[2] and math.log2(res[1] / res[2]) > 1.8


def test_p2_solution_and_invariants():
    errs = []
    for n in (17, 33, 65):
        g = Grid2.square(n)
        f = rhs_named("sine", g)
        sol = solve(P2, f, g)
        assert not sol.u[:, 0, :].any() and not sol.u[:, :, -1].any()
        errs.append(np.abs(sol.u[0] - sine_bump(g)).max())
        # discrete Hessian bounded by the discrete Laplacian up to O(h)
        assert hessian_ratio(sol) <= 1 + g.h
    assert math.log2(errs[0] / errs[1]) > 1.9 and math.log2(errs[1] / errs[2]) > 1.9


@pytest.mark.parametrize("p", [1.3, 2.0, 3.0])
def test_summation_by_parts(p):
    g = Grid2.square(33)
    f = rhs_named("sine_xy", g, 2)
    sol = solve(GrowthCoefficient.power(p), f, g)
    edge, node = energy_pairing(Problem(g, f), sol)
    assert edge == pytest.approx(node, rel=1e-8)


def test_trace_and_monotone_residual():
    g = Grid2.square(33)
    f = rhs_named("sine_xy", g, 2)
    sol = solve(GrowthCoefficient.power(1.5), f, g, tol=1e-11)
    assert [e for e, _, _ in sol.trace] == epsilon_schedule(12)
    assert all(r <= 1e-11 for _, _, r in sol.trace)
    assert np.allclose(sol.flux, node_flux(sol.coefficient, sol.u, g.h), rtol=0, atol=1e-14)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_continuation_stability(p):
    g = Grid2.square(33)
    f = rhs_named("sine_xy", g, 2)
    a = GrowthCoefficient.power(p)
    r12 = norms(solve(a, f, g, epsilon_schedule(12)), f)
    r16 = norms(solve(a, f, g, epsilon_schedule(16)), f)
    for k in ("l2_flux", "l2_grad_flux", "l1_flux"):
        assert abs(getattr(r12, k) - getattr(r16, k)) <= 1e-4 * getattr(r16, k)


def test_energy_self_convergence():
    a = GrowthCoefficient.power(1.5)
    E = []
    for n in (33, 65):
        g = Grid2.square(n)
        E.append(energy(solve(a, rhs_named("ones", g, 2), g)))
    assert np.isfinite(E).all() and abs(E[0] - E[1]) <= 0.05 * E[1]


def test_norm_report_invariants():
    g = Grid2.square(33)
    f = rhs_named("sine_xy", g, 2)
    rep = norms(solve(GrowthCoefficient.power(3), f, g), f)
    assert min(rep.l2_f, rep.l1_f, rep.l2_flux, rep.l2_grad_flux, rep.l1_flux) >= 0
    assert rep.w12_flux >= rep.l2_flux


def test_admissibility_and_geometry():
    g = Grid2.square(17)
    f = rhs_named("sine", g)
    with pytest.raises(DomainError):
        solve(GrowthCoefficient.power(1.1), f, g)
    sol = solve(P2, f, g, epsilon_schedule(0))
    with pytest.raises(GeometryError):
        local_estimate_check(sol, f, (0.3, 0.5), 0.2)
