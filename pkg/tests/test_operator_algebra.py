import numpy as np
import pytest

from elliptic_double.operator_algebra import (
    AnalyticFn, DifferenceOperator, apply, base_poles, commutator, compose, equal_at,
    gauge_conjugate, lincomb, probe_battery, sample_points, theta_zeros, weak_check)
from elliptic_double.sklyanin import generator_S, generator_S_tilde


@pytest.fixture
def pts(rng, params):
    return sample_points(rng, 20, base_poles(params))


def _random_op(rng, params, nterms=3):
    shifts = [complex(*rng.normal(size=2)) * 0.2 for _ in range(nterms)]
    return DifferenceOperator(tuple((s, AnalyticFn.theta(3, params.tau, 1.0, 0.1 * k))
                                    for k, s in enumerate(shifts)))


def test_identity_and_single_shift(params, rng, pts):
    f = probe_battery(rng, 1)[0]
    assert np.allclose(apply(DifferenceOperator.identity(), f)(pts), f(pts))
    eta = params.eta
    assert np.allclose(apply(DifferenceOperator.shift(eta), f)(pts), f(pts + eta))


def test_apply_compose_sequential(params, rng, pts):
    A, B = _random_op(rng, params), _random_op(rng, params)
    f = probe_battery(rng, 1)[0]
    assert np.allclose(apply(compose(A, B), f)(pts), apply(A, apply(B, f))(pts), rtol=1e-12)


def test_compose_identity_and_shift_addition():
    s1, s2 = 0.1 + 0.2j, -0.3 + 0.05j
    B = DifferenceOperator.shift(s1)
    assert compose(DifferenceOperator.identity(), B).shifts == B.shifts
    assert compose(DifferenceOperator.shift(s1), DifferenceOperator.shift(s2)).shifts == [s1 + s2]


def test_duplicate_shifts_merge():
    op = lincomb([1, 2], [DifferenceOperator.shift(0.1), DifferenceOperator.shift(0.1)])
    assert len(op.terms) == 1
    assert op.terms[0][1](np.array([0.3]))[0] == pytest.approx(3)


def test_zero_operator(params, rng):
    A = _random_op(rng, params)
    assert lincomb([1, -1], [A, A]).terms == ()
    assert lincomb([0.5, 0.5, -1], [A, A, A]).terms == ()


def test_lincomb_scales(rng, pts):
    f = probe_battery(rng, 1)[0]
    two = lincomb([2], [DifferenceOperator.identity()])
    assert np.allclose(apply(two, f)(pts), 2 * f(pts))


def test_commutator_two_ways(params, rng):
    A, B = generator_S(1, 0.11 + 0.21j, params), generator_S_tilde(0, 0.11 + 0.21j, params)
    direct = commutator(A, B)
    built = lincomb([1, -1], [compose(A, B), compose(B, A)])
    assert weak_check("comm", direct, built, params, 1e-12, rng).passed


def test_cross_noncommuting_pair(params, rng):
    # S^1 and St^0 sit in different sign classes, so they anticommute
    g = 0.11 + 0.21j
    A, B = generator_S(1, g, params), generator_S_tilde(0, g, params)
    assert not weak_check("AB=BA", compose(A, B), compose(B, A), params, 1e-6, rng).passed
    A0, B0 = generator_S(0, g, params), generator_S_tilde(0, g, params)
    assert weak_check("A0B0=B0A0", compose(A0, B0), compose(B0, A0), params, 1e-9, rng).passed


def test_gauge_conjugate_trivial_and_inverse(params, rng):
    A = _random_op(rng, params)
    assert gauge_conjugate(A, 0) is A
    back = gauge_conjugate(gauge_conjugate(A, 0.3 + 0.1j), -(0.3 + 0.1j))
    z = np.linspace(0.1, 0.9, 7) + 0.02j
    for (s, c), (s2, c2) in zip(A.terms, back.terms):
        assert s == s2
        assert np.allclose(c(z), c2(z), rtol=1e-13)


def test_gauge_coefficient_closed_form(params):
    eta = params.eta
    op = gauge_conjugate(DifferenceOperator.shift(eta), 1j * np.pi / eta)
    z = np.linspace(0.05, 0.95, 10) + 0.03j
    assert np.allclose(op.terms[0][1](z), np.exp(-1j * np.pi * (2 * z + eta)), rtol=1e-13)


def test_gauge_respects_composition(params, rng):
    A, B = _random_op(rng, params), _random_op(rng, params)
    alpha = 0.2 - 0.4j
    lhs = gauge_conjugate(compose(A, B), alpha)
    rhs = compose(gauge_conjugate(A, alpha), gauge_conjugate(B, alpha))
    assert weak_check("gauge", lhs, rhs, params, 1e-10, rng).passed


def test_associativity_and_linearity(params, rng, pts):
    A, B, C = (_random_op(rng, params) for _ in range(3))
    assert weak_check("assoc", compose(compose(A, B), C), compose(A, compose(B, C)),
                      params, 1e-10, rng).passed
    f, h = probe_battery(rng, 2)
    lhs = apply(A, f * 2.0 + h)(pts)
    assert np.allclose(lhs, 2 * apply(A, f)(pts) + apply(A, h)(pts), rtol=1e-12)
    assert np.allclose(apply(A + B, f)(pts), apply(A, f)(pts) + apply(B, f)(pts), rtol=1e-12)


def test_equal_at_basic_cases(rng, pts):
    one = AnalyticFn.const(1.0)
    same = equal_at(DifferenceOperator.identity(), DifferenceOperator.identity(), [one], pts, 1e-12)
    assert same.passed and same.max_residual == 0
    diff = equal_at(DifferenceOperator.identity(), DifferenceOperator.zero(), [one], pts, 1e-12)
    assert not diff.passed and diff.max_residual == pytest.approx(1)


def test_sample_points_avoid_poles(params, rng):
    avoid = base_poles(params)
    z = sample_points(rng, 200, avoid)
    assert all(lat.distance(z).min() >= 1e-3 for lat in avoid)
    assert np.all((z.real >= 0.05) & (z.real <= 0.95) & (np.abs(z.imag) <= 0.1))


def test_reciprocal_needs_declared_zeros():
    f = AnalyticFn(lambda z: z, "z", zeros=None)
    with pytest.raises(ValueError):
        f.reciprocal()
    lat = theta_zeros(1, 0.35j)
    assert lat.distance(np.array([0.0]))[0] == pytest.approx(0)


def test_to_json_schema(params):
    doc = generator_S(0, 0.2, params).to_json()
    assert len(doc) == 2
    assert set(doc[0]) == {"shift", "coeff_descriptor"}
    assert all(isinstance(x, str) for x in doc[0]["shift"])
