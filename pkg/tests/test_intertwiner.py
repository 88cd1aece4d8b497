import numpy as np
import pytest

from elliptic_double import intertwiner as itw
from elliptic_double.operator_algebra import DifferenceOperator, weak_check
from elliptic_double.special_functions import ParameterError, theta1


def _shift_set(op):
    return sorted((round(s.real, 12), round(s.imag, 12)) for s in op.shifts)


def test_trivial_lattice_forms(params, rng):
    ident = itw.m_recursive(0, 0, False, 3, params).op
    assert weak_check("M(0)=1", ident, DifferenceOperator.identity(), params, 1e-14, rng).passed
    shift = itw.m_recursive(0, 0, True, 3, params).op
    assert shift.shifts == [0.5]


@pytest.mark.parametrize("n,m", [(1, 0), (2, 1), (2, 2), (3, 1)])
def test_term_count_and_shifts(n, m, params):
    op = itw.m_normal_ordered(n, m, False, params).op
    assert len(op.terms) == (n + 1) * (m + 1)
    want = sorted((round(s.real, 12), round(s.imag, 12)) for s in
                  ((n - 2 * k) * params.eta + (m - 2 * l) * params.tau / 2
                   for k in range(n + 1) for l in range(m + 1)))
    assert _shift_set(op) == want


def test_first_order_operators(params):
    A = itw.op_A(3, 0.2, params)
    B = itw.op_B(4, 0.2, params)
    assert sorted(A.shifts, key=lambda s: s.imag) == [-params.eta, params.eta]
    assert sorted(B.shifts, key=lambda s: s.imag) == [-params.tau / 2, params.tau / 2]
    assert itw.check_first_order(params, 1e-10).passed


def test_pure_examples(params):
    assert itw.check_pure_examples(params, 1e-10).passed


def test_alpha_closed_forms(params):
    z = np.array([0.21 + 0.03j, 0.63 - 0.05j])
    n = 3
    den = np.prod([theta1(2 * z + 2 * params.eta * j, params.tau) for j in range(n)], axis=0)
    assert np.allclose(itw.alpha_coeff(n, 0, z, params), itw.c_A(params) ** n / den, rtol=1e-12)
    assert np.allclose(itw.alpha_coeff(4, 2, z, params), itw.alpha_coeff_mult(4, 2, z, params),
                       rtol=1e-11)
    assert itw.check_alpha(params, 1e-10).passed


def test_recursion_matches_closed_form(params):
    z = np.array([0.33 + 0.02j])
    for k in (3, 4):
        levels = itw.alpha_recursion(4, k, z, params)
        for n, row in enumerate(levels):
            closed = [itw.alpha_coeff(n, l, z, params) for l in range(n + 1)]
            assert np.allclose(row, closed, rtol=1e-11)


def test_elliptic_binomial(params):
    assert itw.elliptic_binomial(5, 0, params) == pytest.approx(1)
    assert itw.elliptic_binomial(5, 2, params) == pytest.approx(itw.elliptic_binomial(5, 3, params))
    assert itw.elliptic_binomial(4, 2, params) == pytest.approx(
        itw.elliptic_binomial(4, 2, params, multiplicative=True), rel=1e-12)
    with pytest.raises(ParameterError):
        itw.elliptic_binomial(2, 3, params)


def test_two_eta_three_term_coefficients(params):
    z = np.array([0.27 + 0.01j, 0.71 - 0.04j])
    eta, tau = params.eta, params.tau
    t = lambda x: theta1(x, tau)  # noqa: E731
    c2 = itw.c_A(params) ** 2
    want = [c2 / (t(2 * z) * t(2 * z + 2 * eta)),
            c2 * t(4 * eta) / (t(2 * eta) * t(2 * z - 2 * eta) * t(2 * z + 2 * eta)),
            c2 / (t(2 * z - 2 * eta) * t(2 * z))]
    for l in range(3):
        assert np.allclose(itw.alpha_coeff(2, l, z, params), want[l], rtol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4, 5])
def test_closed_equals_recursive_pure_eta(n, params, rng):
    closed = itw.m_closed(n, 0, False, params).op
    for k in (3, 4):
        rec = itw.m_recursive(n, 0, False, k, params).op
        assert weak_check("closed=rec", closed, rec, params, 1e-8, rng, n_probes=2,
                          n_points=8).passed


def test_closed_swap_symmetry(params, rng):
    a = itw.m_closed(2, 0, False, params.swapped()).op
    b = itw.m_closed(0, 2, False, params).op
    assert weak_check("swap", a, b, params, 1e-10, rng, n_probes=2, n_points=8).passed


def test_mixed_closed_form_rejected(params):
    with pytest.raises(ParameterError):
        itw.m_closed(1, 1, False, params)


@pytest.mark.parametrize("n,m,half", [(1, 1, False), (2, 1, True), (3, 2, False), (2, 3, True)])
def test_three_forms_agree(n, m, half, params, rng):
    assert itw.check_forms(n, m, half, params, 1e-8, rng).passed


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1)])
def test_factorization_and_intertwining(n, m, params, rng):
    assert itw.check_factorization(n, m, params, 1e-8, rng).passed
    assert itw.check_intertwining(n, m, False, params, 1e-8, rng).passed
    assert itw.check_half_lattice(n, m, params, 1e-8, rng).passed


def test_broken_intertwiner_fails(params, rng):
    from elliptic_double.operator_algebra import compose
    from elliptic_double.sklyanin import generator_S
    g = 1 * params.eta + params.tau / 2
    M = itw.m_normal_ordered(1, 1, False, params).op
    wrong = compose(generator_S(1, g, params), M)  # S(g) on the left instead of S(-g)
    right = compose(M, generator_S(1, g, params))
    assert not weak_check("broken", wrong, right, params, 1e-6, rng, n_probes=2).passed


@pytest.mark.parametrize("n,m,half", [(1, 1, False), (2, 2, False), (3, 2, True)])
def test_factored_action(n, m, half, params, rng):
    assert itw.check_factored(n, m, params, 1e-8, rng, half=half).passed


def test_factored_parity_violation(params, rng):
    F = itw.random_theta_product(2, params.tau, rng)
    G = itw.random_theta_product(0, 2 * params.eta, rng)
    with pytest.raises(ParameterError, match="parity"):
        itw.apply_factored(2, 1, 1, 1, F, G, 0.3, params)
    assert itw.admissible_parities(2) == [0] and itw.admissible_parities(3) == [-1, 1]


def test_quasic_id2_dualeqn(params, rng):
    assert itw.check_quasic(params, 1e-9, rng).passed
    assert itw.check_id2(params, 1e-9, rng=rng).passed
    assert itw.check_dualeqn(params, 1e-9, rng=rng).passed


def test_build_dispatch(params):
    assert itw.build("normal", 1, 1, False, params).form == "normal_ordered"
    assert itw.build("recursive", 1, 1, False, params, k=4).label() == "recursive(k=4)"
    with pytest.raises(ValueError):
        itw.build("other", 1, 1, False, params)
