import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uhlenbeck import dual
from uhlenbeck.errors import CriticalPoint, SingularPoint
from uhlenbeck.fields import ClosureField, PolynomialField, RadialField, derived_quantities


def linear_identity():
    return PolynomialField(2, [[((1, 0), 1.0)], [((0, 1), 1.0)]])


def half_square():
    return PolynomialField(2, [[((2, 0), 0.5)], []])


def test_identity_map():
    j = linear_identity().jet([0.3, -2.0])
    assert np.array_equal(j.grad, np.eye(2)) and not j.hess.any() and not j.third.any()


def test_half_square_jet():
    j = half_square().jet([1.0, 1.0])
    assert np.array_equal(j.grad[0], [1.0, 0.0])
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1.0
    assert np.array_equal(j.hess, expected)
    dq = derived_quantities(j)
    assert dq.grad_norm == 1 and dq.hess_norm_sq == 1
    assert np.sum(dq.grad_of_grad_norm ** 2) == 1 and np.sum(dq.normal_part ** 2) == 1


def test_modulus_field():
    dq = derived_quantities(RadialField.modulus(2, 2).jet([3.0, 4.0]))
    assert dq.grad_norm == pytest.approx(1.0)
    assert np.allclose(dq.grad_of_grad_norm, 0.0, atol=1e-15)
    with pytest.raises(SingularPoint):
        RadialField.modulus(2, 1).jet([0.0, 0.0])


def test_linear_field_derived():
    u = PolynomialField(3, [[((1, 0, 0), 2.0), ((0, 0, 1), -1.0)], [((0, 1, 0), 0.5)]])
    dq = derived_quantities(u.jet([0.1, 0.2, 0.3]))
    assert not dq.laplacian.any() and not dq.grad_of_grad_norm.any()


def test_critical_point_guard():
    u = PolynomialField(2, [[((2, 0), 1.0), ((0, 2), 1.0)]])
    dq = derived_quantities(u.jet([0.0, 0.0]))
    assert dq.critical
    with pytest.raises(CriticalPoint):
        dq.grad_of_grad_norm
    with pytest.raises(CriticalPoint):
        dq.normal_part


def grad_norm_at(u, x):
    return float(np.linalg.norm(u.jet(x).grad))


def test_grad_of_grad_norm_matches_difference(rng):
    for _ in range(20):
        u = PolynomialField.random(2, 2, 3, rng)
        x = rng.uniform(-1, 1, 2)
        h = 1e-5
        fd = np.array([(grad_norm_at(u, x + h * e) - grad_norm_at(u, x - h * e)) / (2 * h)
                       for e in np.eye(2)])
        exact = derived_quantities(u.jet(x)).grad_of_grad_norm
        assert np.linalg.norm(exact - fd) <= 1e-8 * max(1.0, np.linalg.norm(exact))


def test_polynomial_third_derivatives_exact():
    # u = x^2 y + 3 y^3 : u_xxy = 2, u_yyy = 18
    u = PolynomialField(2, [[((2, 1), 1.0), ((0, 3), 3.0)]])
    T = u.jet([0.7, -0.4]).third[0]
    assert T[0, 0, 1] == T[0, 1, 0] == T[1, 0, 0] == 2.0
    assert T[1, 1, 1] == 18.0 and T[0, 0, 0] == 0.0 and T[0, 1, 1] == 0.0


def test_closure_matches_polynomial(rng):
    u = PolynomialField.random(3, 2, 3, rng)
    comps = u.components()

    def f(x):
        out = []
        for terms in comps:
            acc = 0.0
            for e, c in terms:
                m = c
                for xi, k in zip(x, e):
                    m = m * xi ** int(k)
                acc = acc + m
            out.append(acc)
        return out

    cl = ClosureField(3, 2, f)
    x = rng.uniform(-1, 1, 3)
    a, b = u.jet(x), cl.jet(x)
    for name in ("value", "grad", "hess", "third"):
        assert np.allclose(getattr(a, name), getattr(b, name), atol=1e-12)


def test_closure_transcendental():
    cl = ClosureField(2, 1, lambda x: [dual.sin(x[0]) * dual.exp(x[1])])
    j = cl.jet([0.4, -0.3])
    s, c, e = np.sin(0.4), np.cos(0.4), np.exp(-0.3)
    assert j.third[0, 0, 0, 0] == pytest.approx(-c * e)
    assert j.third[0, 0, 0, 1] == pytest.approx(-s * e)
    assert j.third[0, 1, 1, 1] == pytest.approx(s * e)
    assert j.hess[0, 0, 1] == pytest.approx(c * e)


def test_radial_matches_closure():
    phi = (lambda r: r ** 3, lambda r: 3 * r ** 2, lambda r: 6 * r, lambda r: 6.0)
    rad = RadialField(2, [phi])
    cl = ClosureField(2, 1, lambda x: [dual.sqrt(x[0] * x[0] + x[1] * x[1]) ** 3])
    a, b = rad.jet([0.6, -1.1]), cl.jet([0.6, -1.1])
    assert np.allclose(a.third, b.third, rtol=1e-12, atol=1e-12)
    assert np.allclose(a.hess, b.hess, rtol=1e-12, atol=1e-12)


def test_json_round_trip(rng):
    u = PolynomialField.random(3, 2, 3, rng)
    v = PolynomialField.from_json(u.to_json())
    x = rng.uniform(-1, 1, 3)
    assert np.array_equal(u.jet(x).third, v.jet(x).third)
    assert v.to_json() == u.to_json()


seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.sampled_from([2, 3]), st.sampled_from([1, 2, 3]))
@settings(max_examples=50, deadline=None)
def test_jet_symmetry_and_chain_bound(seed, n, N):
    rng = np.random.default_rng(seed)
    u = PolynomialField.random(n, N, 3, rng)
    j = u.jet(rng.uniform(-1, 1, n))
    assert j.symmetry_defect() <= 1e-12
    dq = derived_quantities(j)
    if dq.grad_norm >= 1e-6:
        assert np.linalg.norm(dq.grad_of_grad_norm) <= np.sqrt(dq.hess_norm_sq) * (1 + 1e-12)


@given(seeds, st.sampled_from([2, 3]))
@settings(max_examples=30, deadline=None)
def test_jet_linearity(seed, n):
    rng = np.random.default_rng(seed)
    u, v = PolynomialField.random(n, 2, 3, rng), PolynomialField.random(n, 2, 2, rng)
    x = rng.uniform(-1, 1, n)
    s = (u + v).jet(x)
    ju, jv = u.jet(x), v.jet(x)
    for name in ("value", "grad", "hess", "third"):
        assert np.allclose(getattr(s, name), getattr(ju, name) + getattr(jv, name), atol=1e-13)
