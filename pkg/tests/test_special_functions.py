import numpy as np
import pytest

from elliptic_double import special_functions as sf
from elliptic_double.special_functions import (
    ModularParams, ParameterError, PoleError, elliptic_gamma, mult_theta, qpochhammer,
    theta1, theta_a)


def test_theta1_at_zero_and_half_period(params):
    assert abs(theta1(0.0, params.tau)) < 1e-15
    assert abs(theta_a(2, 0.5, params.tau)) < 1e-15


def test_theta_vectorised_matches_scalar(params, rng):
    z = rng.normal(size=7) * 0.3 + 0.1j * rng.normal(size=7)
    for a in (1, 2, 3, 4):
        vec = theta_a(a, z, params.tau)
        assert vec.shape == z.shape
        assert np.allclose(vec, [theta_a(a, complex(w), params.tau) for w in z], rtol=1e-14)


def test_qpochhammer_trivial_cases(params):
    assert qpochhammer(0.0, params.p) == 1
    assert abs(qpochhammer(1.0, params.p)) == 0


def test_mult_theta_rejects_zero(params):
    with pytest.raises(ParameterError):
        mult_theta(0.0, params.p)


def test_gamma_pole_detected(params):
    # Gamma(z) has a pole at z = 0
    with pytest.raises(PoleError):
        elliptic_gamma(0.0, params)


@pytest.mark.parametrize("tau,eta", [(0.1 - 0.3j, 0.07 + 0.28j), (0.1 + 0.35j, 0.07 - 0.01j)])
def test_parameters_need_upper_half_plane(tau, eta):
    with pytest.raises(ParameterError, match="Im"):
        ModularParams(tau, eta)


def test_commensurate_parameters_rejected():
    with pytest.raises(ParameterError, match="incommensurab"):
        ModularParams(0.5j, 0.25j)


def test_swapped_parameters(params):
    sw = params.swapped()
    assert sw.tau == 2 * params.eta and sw.eta == params.tau / 2
    assert abs(sw.p - params.q) < 1e-15 and abs(sw.q - params.p) < 1e-15


@pytest.mark.parametrize("check", [sf.check_theta_forms, sf.check_mper, sf.check_theta_identity,
                                   sf.check_gamma, sf.check_qpochhammer])
def test_identity_checks_pass(check, params, rng):
    rep = check(params, 1e-10, rng=rng)
    assert rep.passed, (rep.identity_id, rep.max_residual)


def test_corrupted_theta_fails(params, rng):
    # quasi-periodicity with the wrong multiplier must be caught
    z = 0.1 + 0.05j
    lhs = theta1(z + params.tau, params.tau)
    rhs = np.exp(-1j * np.pi * params.tau - 2j * np.pi * z) * theta1(z, params.tau)
    assert abs(lhs + rhs) < 1e-12 * abs(rhs)
    assert abs(lhs - rhs) > 1e-3 * abs(rhs)
