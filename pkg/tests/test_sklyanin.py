import numpy as np
import pytest

from elliptic_double.operator_algebra import (
    AnalyticFn, apply, base_poles, sample_points, weak_check)
from elliptic_double.sklyanin import (
    LatticeSpin, _generator_bracket, baxter_weights, casimir_scalar, check_algebra,
    check_casimirs, check_cross_relations, check_rll, constraint_residual, cross_sign,
    generator_S, generator_S_tilde, structure_constants)
from elliptic_double.special_functions import theta_a

G = 0.11 + 0.21j


def test_constraint_both_sets(params):
    sc = structure_constants(params)
    assert abs(constraint_residual(sc.untilded)) < 1e-12
    assert abs(constraint_residual(sc.tilded)) < 1e-12


def test_tilded_constants_are_swapped_untilded(params):
    sc, sw = structure_constants(params), structure_constants(params.swapped())
    assert np.allclose(sc.tilded, sw.untilded, rtol=1e-13)


def test_J1_direct(params):
    th = lambda z: theta_a(2, z, params.tau)  # noqa: E731
    direct = th(2 * params.eta) * th(0) / th(params.eta) ** 2
    assert structure_constants(params).J1 == pytest.approx(direct, rel=1e-14)


def test_minus_shift_coefficient_is_reflection(params):
    z = np.linspace(0.1, 0.9, 9) + 0.02j
    for a in range(4):
        op = generator_S(a, G, params)
        plus, minus = op.coefficient(params.eta), op.coefficient(-params.eta)
        assert np.allclose(minus(z), plus(-z), rtol=1e-12)


@pytest.mark.parametrize("a", range(4))
def test_bracket_form_matches(a, params, rng):
    bracket = _generator_bracket(a, G, params.eta, params.tau)
    assert weak_check("bracket", bracket, generator_S(a, G, params), params, 1e-12, rng).passed


def test_s0_at_eta_maps_one_to_even(params, rng):
    z = sample_points(rng, 20, base_poles(params))
    f = apply(generator_S(0, params.eta, params), AnalyticFn.const(1.0))
    assert np.allclose(f(z), f(-z), rtol=1e-12)


def test_tilde_shifts_and_swap(params, rng):
    St = generator_S_tilde(1, G, params)
    assert sorted(St.shifts, key=lambda s: s.imag) == [-params.tau / 2, params.tau / 2]
    sw = params.swapped()
    assert weak_check("swap", St, generator_S(1, G, sw), params, 1e-12, rng).passed


def test_algebra_passes(params, rng):
    assert check_algebra(G, params, 1e-9, rng=rng).passed
    assert check_algebra(G, params, 1e-9, tilde=True, rng=rng).passed


def test_corrupted_structure_constant_fails(params, rng):
    J = list(structure_constants(params).untilded)
    J[0] *= 1.01
    assert not check_algebra(G, params, 1e-9, rng=rng, J_override=tuple(J), n_points=5).passed


def test_cross_sign_pattern(params, rng):
    assert cross_sign(0, 3) == 1 and cross_sign(1, 2) == 1
    assert cross_sign(0, 1) == -1 and cross_sign(2, 3) == -1
    assert check_cross_relations(G, params, 1e-9, rng).passed


def test_casimirs(params, rng):
    assert check_casimirs(G, params, 1e-9, rng).passed
    assert abs(casimir_scalar("K0", 0.0, params)) < 1e-30
    for which in ("K0", "K2", "Kt0", "Kt2"):
        assert casimir_scalar(which, -G, params) == pytest.approx(casimir_scalar(which, G, params))


def test_lattice_spin(params):
    g = LatticeSpin.at(2, 1, True, params)
    assert abs(g.g - (2 * params.eta + params.tau / 2 + 0.5)) < 1e-15
    g.check(params)
    assert g.spin_ell(params) == pytest.approx((g.g / params.eta - 1) / 2)
    with pytest.raises(ValueError):
        LatticeSpin(g.g + 1e-6, (2, 1, True)).check(params)


def test_rll_generic_and_coincident(params, rng):
    assert check_rll(0.13 + 0.04j, 0.05 - 0.02j, G, params, 1e-8, rng).passed
    assert check_rll(0.07 + 0.01j, 0.07 + 0.01j, G, params, 1e-8, rng, n_points=5).passed


def test_rll_corrupted_weight_fails(params, rng):
    u, v = 0.13 + 0.04j, 0.05 - 0.02j
    w = baxter_weights(u - v, params).copy()
    w[1] = -w[1]
    assert not check_rll(u, v, G, params, 1e-8, rng, weights=w, n_points=5).passed
