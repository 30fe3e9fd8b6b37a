
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uhlenbeck.errors import DivergentIntegral, DomainError, IndexViolation, NonPositiveCoefficient, SingularAtZero
from uhlenbeck.orlicz import (GrowthCoefficient, YoungPair, build_young_pair, compute_indices,
                             default_grid, epsindex_check, monotonicity_ratio, regularization_limit,
                             regularize, sandwich_check, sobolev_check, v_map, young_checks)

# brute-force Q_a = 1/2 + t/((1+t) log(1+t)) on 10^6 log-spaced points in [1e-6, 1e6]
POWER_LOG_ORACLE = (0.5723823360289951, 1.4999995000004167)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0, 4.0])
def test_power_indices(p):
    ia, sa, nonfinite = compute_indices(GrowthCoefficient.power(p))
    assert abs(ia - (p - 2)) < 1e-10 and abs(sa - (p - 2)) < 1e-10 and not nonfinite


def test_constant_indices():
    assert tuple(compute_indices(GrowthCoefficient.constant(2.0))[:2]) == (0.0, 0.0)


def test_power_log_indices_match_fine_grid_oracle():
    ia, sa, _ = compute_indices(GrowthCoefficient.power_log(2.5, 1.0))
    assert ia == pytest.approx(POWER_LOG_ORACLE[0], rel=1e-9)
    assert sa == pytest.approx(POWER_LOG_ORACLE[1], rel=1e-9)


def test_indices_errors():
    with pytest.raises(DomainError):
        compute_indices(GrowthCoefficient.power(2), np.array([]))
    bad = GrowthCoefficient.tabulated([[1e-3, 1.0], [1.0, 2.0], [1e3, 3.0]])
    neg = GrowthCoefficient(eval=lambda t: np.asarray(t) * 0 - 1.0, deriv=lambda t: np.asarray(t) * 0.0)
    with pytest.raises(NonPositiveCoefficient):
        compute_indices(neg)
    assert np.isfinite(compute_indices(bad).lower)


def test_young_pair_closed_forms():
    pair = build_young_pair(GrowthCoefficient.power(2))
    t = np.array([1e-3, 0.5, 1.0, 7.0, 1e3])
    assert np.allclose(pair.B(t), t ** 2 / 2, rtol=1e-10)
    assert abs(build_young_pair(GrowthCoefficient.power(3)).B(2.0) - 8 / 3) < 1e-10
    assert pair.B(0.0) == 0.0


@pytest.mark.parametrize("p", [1.2, 1.5, 3.0])
def test_young_pair_power_law(p):
    pair = YoungPair(GrowthCoefficient.power(p))
    t = np.logspace(-9, 9, 37)
    assert np.allclose(pair.B(t), t ** p / p, rtol=1e-9)


def test_young_pair_convex_and_sandwiched():
    a = GrowthCoefficient.power_log(2.5, 1.0)
    pair = build_young_pair(a)
    grid = default_grid()
    B = pair.B(grid)
    assert np.all(np.diff(B) > 0)
    t = np.linspace(0.0, 10.0, 2001)
    assert np.min(np.diff(pair.B(t), 2)) >= -1e-12
    tb = grid * pair.b(grid)
    assert np.all(B <= tb * (1 + 1e-10))
    assert np.all(tb <= (a.analytic_indices[1] + 2) * B * (1 + 1e-10))


def test_decreasing_b_rejected():
    with pytest.raises(IndexViolation):
        build_young_pair(GrowthCoefficient.power(0.5))


def test_conjugate_closed_form():
    # B(s) = s^2/2 -> B~(y) = y^2/2
    pair = build_young_pair(GrowthCoefficient.power(2))
    y = np.array([1e-3, 0.3, 2.0, 50.0])
    assert np.allclose(pair.conjugate(y), y ** 2 / 2, rtol=1e-9)


def test_regularize_examples():
    a = regularize(GrowthCoefficient.power(1.5), 1.0)
    assert float(a.eval(0.0)) == pytest.approx(1.0)
    assert float(regularize(GrowthCoefficient.power(3), 0.1).eval(0.1)) == pytest.approx(0.141421356, rel=1e-8)
    with pytest.raises(DomainError):
        regularize(GrowthCoefficient.power(2), 0.0)
    row = epsindex_check(GrowthCoefficient.power(1.5), 1e-2)
    assert row.passed
    ie, se, _ = compute_indices(regularize(GrowthCoefficient.power(1.5), 1e-2))
    assert ie >= -0.5 - 1e-12 and se <= 1e-12


@given(st.floats(1.05, 5.0), st.floats(1e-4, 10.0))
@settings(max_examples=40, deadline=None)
def test_regularized_indices_property(p, eps):
    ia, sa = p - 2, p - 2
    ie, se, _ = compute_indices(regularize(GrowthCoefficient.power(p), eps))
    assert ie >= min(ia, 0) - 1e-9 and se <= max(sa, 0) + 1e-9


@given(st.floats(1e-6, 1e6), st.floats(1e-3, 10.0), st.floats(1.1, 4.0))
@settings(max_examples=60, deadline=None)
def test_regularized_derivative_matches_difference(t, eps, p):
    a = regularize(GrowthCoefficient.power(p), eps)
    h = 1e-4 * t
    fd = (float(a.eval(t + h)) - float(a.eval(t - h))) / (2 * h)
    # rounding in the difference is about 1e-16 a / h
    assert float(a.deriv(t)) == pytest.approx(fd, rel=1e-5, abs=1e-10 * float(a.eval(t)) / t)


def test_sandwich_examples():
    rows = {r.quantity: r for r in sandwich_check(GrowthCoefficient.power(2), 0.5)}
    assert rows["eps_energy_lower_c1"].constant == pytest.approx(2.0, rel=1e-9)
    assert rows["eps_energy_lower_c2"].constant == pytest.approx(0.0, abs=1e-9)
    assert rows["eps_energy_upper_c3"].constant == pytest.approx(2.0, rel=1e-9)
    grid = np.logspace(-3, 3, 1001)
    for a, eps in [(GrowthCoefficient.power(3), 0.25), (GrowthCoefficient.power(1.5), 1.0)]:
        assert all(r.passed for r in sandwich_check(a, eps, grid))


@pytest.mark.parametrize("a", [GrowthCoefficient.power(1.5), GrowthCoefficient.power(3),
                               GrowthCoefficient.power_log(2.5, 1.0)])
def test_young_checks_pass(a):
    rows = young_checks(a)
    assert all(r.passed for r in rows), [r for r in rows if not r.passed]


def test_v_map():
    P = np.array([[1.0, 2.0], [0.5, -1.0]])
    assert np.allclose(v_map(GrowthCoefficient.constant(1.0), 0.3, P), P)
    Q = P * 2 / np.linalg.norm(P)
    assert np.allclose(v_map(GrowthCoefficient.power(4), 0.0, Q), 2 * Q)
    with pytest.raises(SingularAtZero):
        v_map(GrowthCoefficient.power(1.5), 0.0, np.zeros((2, 2)))
    V = v_map(GrowthCoefficient.power(1.5), 0.1, P)
    a = regularize(GrowthCoefficient.power(1.5), 0.1)
    assert np.sum(V ** 2) == pytest.approx(float(a.eval(np.linalg.norm(P))) * np.sum(P ** 2))


def test_monotonicity_ratio_bounded(rng):
    lo, hi = monotonicity_ratio(GrowthCoefficient.power(1.5), 1e-2, rng=rng)
    assert 0 < lo <= hi < np.inf
    # for a = 1 both sides coincide
    lo, hi = monotonicity_ratio(GrowthCoefficient.constant(1.0), 0.5, pairs=100, rng=rng)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)


def test_regularization_limit_p3():
    errs = regularization_limit(GrowthCoefficient.power(3))
    assert np.all(np.diff(errs) < 0) and errs[-1] < 1e-6


def test_regularization_limit_rate_p_below_2():
    # the error is attained near |P| ~ eps and scales like eps^(p-1)
    errs = regularization_limit(GrowthCoefficient.power(1.5), ks=[10, 20])
    assert errs[0] / errs[1] == pytest.approx(2 ** 5, rel=1e-2)


def test_sobolev_examples():
    ok, lhs, rhs, _ = sobolev_check(lambda t: t * t, 4.0, lambda r: 0.0)
    assert ok and lhs == 0 and rhs == 0
    ok, lhs, rhs, c = sobolev_check(lambda t: t * t, 4.0, lambda r: 1.0 * (r < 1), s_A=2.0)
    assert ok and rhs > 0 and np.isfinite(c)
    ok, *_ = sobolev_check(lambda t: t ** 3 / 3, 5.0, lambda r: max(0.0, 1.0 - r), s_A=3.0)
    assert ok


def test_sobolev_errors():
    with pytest.raises(DomainError):
        sobolev_check(lambda t: t * t, 1.5, lambda r: 1.0, s_A=2.0)
    with pytest.raises(DivergentIntegral):
        # (t / A)^(1/(sigma-1)) = t^-3 is not integrable at 0
        sobolev_check(lambda t: t ** 7, 2.0, lambda r: 1.0)


def test_from_config_and_tabulated():
    a = GrowthCoefficient.from_config({"family": "power_log", "p": 2.5, "q": 1.0})
    assert a.analytic_indices == (0.5, 1.5)
    t = np.logspace(-3, 3, 50)
    tab = GrowthCoefficient.from_config({"family": "tabulated", "points": np.c_[t, t ** 0.5].tolist()})
    s = np.array([0.01, 1.3, 200.0])
    assert np.allclose(tab.eval(s), s ** 0.5, rtol=1e-6)
    assert np.allclose(tab.deriv(s), 0.5 * s ** -0.5, rtol=1e-2)
    with pytest.raises(DomainError):
        GrowthCoefficient.from_config({"family": "nope"})
