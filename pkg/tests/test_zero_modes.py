import numpy as np
import pytest

from elliptic_double import zero_modes as zm
from elliptic_double.operator_algebra import AnalyticFn
from elliptic_double.special_functions import ParameterError, theta_a


def test_basis_enumeration(params):
    one = zm.basis_phi(1, 1, params)
    z = np.array([0.2 + 0.01j, 0.7 - 0.03j])
    assert len(one) == 1 and np.allclose(one[0](z), 1)
    two = zm.basis_phi(2, 1, params)
    assert [(b.j, b.l) for b in two] == [(0, 0), (1, 0)]
    assert np.allclose(two[0](z), theta_a(4, z, params.tau / 2))
    assert np.allclose(two[1](z), theta_a(3, z, params.tau / 2))
    with pytest.raises(ParameterError):
        zm.basis_phi(0, 2, params)


def test_basis_even_and_full_rank(params):
    z = np.array([0.13 + 0.02j, 0.41 - 0.05j])
    for phi in zm.basis_phi(3, 2, params):
        assert np.allclose(phi(-z), phi(z), rtol=1e-12)
    assert zm.numerical_rank(3, 3, params) == 9
    assert zm.numerical_rank(2, 2, params) == 4


def test_theta_squares(params):
    a, b = zm.theta_square_decompose(1, 0.3 + 0.1j, 0.3 + 0.1j, params)
    assert abs(a + b) < 1e-14 * abs(a)
    assert zm.check_theta_squares(params, 1e-11).passed
    x = np.array([0.17 + 0.04j])
    for k in (1, 2, 3, 4):
        a, b = zm.theta_square_decompose(k, x, 0.0, params)
        assert np.allclose(a + b, 2 * theta_a(k, x, params.tau) ** 2, rtol=1e-12)


def test_decompose_round_trip(params, rng):
    basis = zm.basis_phi(2, 2, params)
    c0, res0 = zm.decompose_in_basis(basis[0].value, 2, 2, params, rng)
    assert res0 < 1e-12 and np.allclose(c0, [1, 0, 0, 0], atol=1e-10)
    coeffs = rng.normal(size=4) + 1j * rng.normal(size=4)
    f = AnalyticFn(lambda z: sum(c * b(z) for c, b in zip(coeffs, basis)))
    c, res = zm.decompose_in_basis(f, 2, 2, params, rng)
    assert res < 1e-12 and np.allclose(c, coeffs, rtol=1e-9)


def test_decompose_detects_outside_function(params, rng):
    f = AnalyticFn(lambda z: np.exp(2j * np.pi * z))
    _, res = zm.decompose_in_basis(f, 2, 2, params, rng)
    assert res > 1e-3


@pytest.mark.parametrize("n,m,half", [(1, 1, False), (2, 2, False), (3, 2, True), (2, 3, True)])
def test_annihilation(n, m, half, params, rng):
    assert zm.check_annihilation(n, m, half, params, rng=rng).passed


@pytest.mark.parametrize("name", ["2eta-periodic", "tau-periodic"])
def test_annihilation_with_multiplier(name, params, rng):
    mult = zm.default_multipliers(params)[name]
    assert zm.check_annihilation(2, 2, False, params, mult, rng=rng).passed
    assert zm.check_annihilation(2, 1, True, params, mult, rng=rng).passed


def test_non_zero_mode_not_annihilated(params, rng):
    from elliptic_double.intertwiner import m_normal_ordered
    from elliptic_double.operator_algebra import annihilation_residual, probe_battery
    op = m_normal_ordered(2, 2, False, params).op
    f = probe_battery(rng, 1)[0]
    z = np.array([0.3 + 0.02j, 0.6 - 0.01j])
    assert annihilation_residual(op, f, z).min() > 1e-3


def test_half_shuffle_is_permutation(params):
    perm = zm.half_shuffle(2, 3)
    assert sorted(perm) == list(range(6))
    assert zm.check_half_shuffle(2, 3, params).passed


def test_invariance_two_two(params, rng):
    reps = zm.check_invariance(2, 2, params, rng=rng)
    assert len(reps) == 8
    assert {r.notes["generator"] for r in reps} == {f"{s}{a}" for s in ("S", "St") for a in range(4)}
    assert all(r.passed for r in reps), [(r.notes["generator"], r.max_residual) for r in reps]


def test_single_lattice_contrast(params, rng):
    res = zm.single_lattice_failure(2, params, rng)
    assert res["S"] < 1e-10
    assert res["St"] >= 1e-2


def test_uniqueness_probe_breaks_invariance(params, rng):
    assert zm.uniqueness_probe(2, 2, params, rng) > 1e-2


def test_zmneta(params, rng):
    for n in (1, 2, 3):
        assert zm.check_zmneta(n, params, rng=rng).passed


def test_basis_h(params):
    w = np.array([np.exp(0.3j), 1.1 * np.exp(1.9j)])
    assert np.allclose(zm.basis_h(0, 0, w, params), 1)
    assert np.allclose(zm.basis_h(3, 1, w, params, two_index=(2, 1)),
                       zm.basis_h(3, 1, 1 / w, params, two_index=(2, 1)), rtol=1e-12)
    with pytest.raises(ParameterError):
        zm.basis_h(2, 3, w, params)
    assert zm.check_basis_h(2, 2, params).passed
