"""Theta functions, q-Pochhammer symbols and the elliptic gamma function.

All evaluators accept scalars or numpy arrays of complex arguments and
return values of the same shape.  Truncation is driven by explicit
geometric/Gaussian tail bounds taken from :class:`Precision`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvergenceError",
    "ParameterError",
    "PoleError",
    "Precision",
    "DEFAULT_PRECISION",
    "ModularParams",
    "default_params",
    "theta1",
    "theta_a",
    "qpochhammer",
    "mult_theta",
    "r_const",
    "elliptic_gamma",
    "elliptic_gamma_mult",
    "check_theta_forms",
    "check_mper",
    "check_theta_identity",
    "check_gamma",
    "check_qpochhammer",
]

TWO_PI_I = 2j * np.pi


class ParameterError(ValueError):
    """Raised when (tau, eta) or a derived quantity violates an invariant."""


class ConvergenceError(ArithmeticError):
    """Raised when a series or product hits ``max_terms`` before converging."""


class PoleError(ArithmeticError):
    """Raised when an evaluation lands (numerically) on a pole."""


@dataclass(frozen=True)
class Precision:
    rel_tol: float = 1e-17
    max_terms: int = 4000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 8:
            raise ParameterError(f"max_terms must be >= 8, got {self.max_terms}")


DEFAULT_PRECISION = Precision()

DEFAULT_TAU = 0.10 + 0.35j
DEFAULT_ETA = 0.07 + 0.28j


def _incommensurate(tau: complex, eta: complex, bound: int = 12, eps: float = 1e-6) -> bool:
    # brute-force screen for small integer relations 2n*eta + m*tau + k ~ 0
    r = np.arange(-bound, bound + 1)
    n, m = np.meshgrid(r, r, indexing="ij")
    v = 2 * n * eta + m * tau
    # the nearest integer k is the only candidate worth checking
    k = np.clip(-np.round(v.real), -bound, bound)
    d = np.abs(v + k)
    d[(n == 0) & (m == 0)] = np.inf
    return bool(np.all(d >= eps))


@dataclass(frozen=True)
class ModularParams:
    """The pair (tau, eta) with nomes ``p = e^{2 pi i tau}``, ``q = e^{4 pi i eta}``."""

    tau: complex
    eta: complex
    precision: Precision = DEFAULT_PRECISION
    p: complex = field(init=False)
    q: complex = field(init=False)

    def __post_init__(self):
        tau, eta = complex(self.tau), complex(self.eta)
        if not tau.imag > 0:
            raise ParameterError(f"Im(tau) must be > 0, got tau={tau}")
        if not eta.imag > 0:
            raise ParameterError(f"Im(eta) must be > 0, got eta={eta}")
        if not _incommensurate(tau, eta):
            raise ParameterError(
                f"1, 2*eta, tau fail the incommensurability screen (tau={tau}, eta={eta})"
            )
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "p", complex(np.exp(TWO_PI_I * tau)))
        object.__setattr__(self, "q", complex(np.exp(2 * TWO_PI_I * eta)))

    def swapped(self) -> "ModularParams":
        """Parameters with the roles of ``2*eta`` and ``tau`` exchanged."""
        return ModularParams(2 * self.eta, self.tau / 2, self.precision)


def default_params() -> ModularParams:
    return ModularParams(DEFAULT_TAU, DEFAULT_ETA)


def _as_array(z):
    return np.asarray(z, dtype=complex)


def _wrap(out, scalar):
    return complex(out) if scalar else out


def theta1(z, tau: complex, prec: Precision = DEFAULT_PRECISION):
    r"""Odd Jacobi theta function

    .. math:: \theta_1(z|\tau) = -\sum_{n} e^{\pi i (n+1/2)^2 \tau} e^{2\pi i (n+1/2)(z+1/2)}

    The sum runs symmetrically over ``n in [-N, N]`` with ``N`` large enough
    that every omitted term is below ``rel_tol`` times the dominant term.
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise ParameterError(f"Im(tau) must be > 0, got {tau}")
    scalar = np.ndim(z) == 0
    z = _as_array(z)
    t = tau.imag
    # terms are Gaussian in n, centred at n + 1/2 = -Im(z)/Im(tau)
    centre = float(np.max(np.abs(z.imag))) / t if z.size else 0.0
    width = math.sqrt((-math.log(prec.rel_tol) + 10.0) / (math.pi * t))
    N = int(math.ceil(centre + width)) + 1
    if 2 * N + 1 > prec.max_terms:
        raise ConvergenceError(f"theta series needs {2 * N + 1} terms (> max_terms)")
    n = np.arange(-N, N) + 0.5
    expo = 1j * np.pi * n * n * tau + TWO_PI_I * np.multiply.outer(z + 0.5, n)
    out = -np.exp(expo).sum(axis=-1)
    return _wrap(out, scalar)


def theta_a(a: int, z, tau: complex, prec: Precision = DEFAULT_PRECISION):
    """Jacobi theta functions ``theta_a(z|tau)``, a = 1..4, built from theta1
    through half-period shifts."""
    tau = complex(tau)
    if a == 1:
        return theta1(z, tau, prec)
    if a == 2:
        return theta1(_as_array(z) + 0.5, tau, prec) if np.ndim(z) else theta1(z + 0.5, tau, prec)
    if a == 3:
        scalar = np.ndim(z) == 0
        z = complex(z) if scalar else _as_array(z)
        out = np.exp(1j * np.pi * tau / 4 + 1j * np.pi * z) * theta_a(2, z + tau / 2, tau, prec)
        return _wrap(out, scalar)
    if a == 4:
        return theta_a(3, (_as_array(z) if np.ndim(z) else complex(z)) + 0.5, tau, prec)
    raise ValueError(f"theta index must be 1..4, got {a}")


def qpochhammer(t, p: complex, prec: Precision = DEFAULT_PRECISION):
    """Infinite q-Pochhammer symbol ``(t; p)_inf``."""
    p = complex(p)
    if not abs(p) < 1:
        raise ParameterError(f"|p| must be < 1, got {abs(p)}")
    scalar = np.ndim(t) == 0
    t = _as_array(t)
    out = np.ones_like(t)
    term = t.copy()
    for _ in range(prec.max_terms):
        if not np.any(np.abs(term) >= prec.rel_tol):
            return _wrap(out, scalar)
        out = out * (1 - term)
        term = term * p
    raise ConvergenceError("q-Pochhammer product did not converge within max_terms")


def mult_theta(t, p: complex, prec: Precision = DEFAULT_PRECISION):
    """Multiplicative theta function ``theta(t; p) = (t; p)_inf (p/t; p)_inf``."""
    scalar = np.ndim(t) == 0
    t = _as_array(t)
    if np.any(t == 0):
        raise ParameterError("theta(t; p) is undefined at t = 0")
    out = qpochhammer(t, p, prec) * qpochhammer(p / t, p, prec)
    return _wrap(out, scalar)


def r_const(tau: complex, prec: Precision = DEFAULT_PRECISION) -> complex:
    """``R(tau) = p^{-1/8} / (i (p; p)_inf)`` with ``p^{-1/8}`` taken as ``e^{-pi i tau/4}``."""
    tau = complex(tau)
    if not tau.imag > 0:
        raise ParameterError(f"Im(tau) must be > 0, got {tau}")
    p = np.exp(TWO_PI_I * tau)
    return complex(np.exp(-1j * np.pi * tau / 4) / (1j * qpochhammer(p, p, prec)))


def elliptic_gamma_mult(u, p: complex, q: complex, prec: Precision = DEFAULT_PRECISION):
    r"""Elliptic gamma function in multiplicative form

    .. math:: \Gamma(u; p, q) = \prod_{j,k\ge 0} \frac{1 - u^{-1} p^{j+1} q^{k+1}}{1 - u p^j q^k}
    """
    p, q = complex(p), complex(q)
    scalar = np.ndim(u) == 0
    u = _as_array(u)
    ap, aq = abs(p), abs(q)
    if not (ap < 1 and aq < 1):
        raise ParameterError("elliptic gamma needs |p|, |q| < 1")
    stop = prec.rel_tol * (1 - ap) * (1 - aq)
    num = np.ones_like(u)
    den = np.ones_like(u)
    a = u.copy()
    b = p * q / u
    for _ in range(prec.max_terms):
        if max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0)) < stop:
            break
        num = num * qpochhammer(b, q, prec)
        factors = qpochhammer(a, q, prec)
        den = den * factors
        a = a * p
        b = b * p
    else:
        raise ConvergenceError("elliptic gamma product did not converge within max_terms")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    if not np.all(np.isfinite(out)) or np.any(np.abs(den) < 1e3 * prec.rel_tol):
        raise PoleError("elliptic gamma evaluated at a pole")
    return _wrap(out, scalar)


def elliptic_gamma(z, params: ModularParams, prec: Precision | None = None):
    """``Gamma(z | tau, 2 eta)`` with ``u = e^{2 pi i z}``."""
    prec = prec or params.precision
    return elliptic_gamma_mult(np.exp(TWO_PI_I * _as_array(z)) if np.ndim(z) else
                               complex(np.exp(TWO_PI_I * complex(z))),
                               params.p, params.q, prec)


# -- identity checks -----------------------------------------------------------

def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)


def _rand(rng, count, re=0.5, im=0.2):
    return rng.uniform(-re, re, count) + 1j * rng.uniform(-im, im, count)


def check_theta_forms(params: ModularParams, tol: float = 1e-10, count: int = 50,
                      rng: np.random.Generator | None = None):
    """Series against product form of theta1, oddness and the unit period."""
    from .reports import VerificationReport, merge

    rng = rng or np.random.default_rng(0)
    tau = params.tau
    z = rng.uniform(-0.5, 0.5, count) + 1j * rng.uniform(-tau.imag, tau.imag, count)
    R = r_const(tau)
    t1 = theta1(z, tau)
    prod = np.exp(-1j * np.pi * z) * mult_theta(np.exp(TWO_PI_I * z), params.p) / R
    parts = [
        VerificationReport("series=product", tol, list(zip(z.tolist(), _rel(t1, prod).tolist()))),
        VerificationReport("odd", tol, list(zip(z.tolist(), _rel(theta1(-z, tau), -t1).tolist()))),
        VerificationReport("unit-period", tol,
                           list(zip(z.tolist(), _rel(theta1(z + 1, tau), -t1).tolist()))),
    ]
    return merge("Eq-theta1", parts, tol)


def check_mper(params: ModularParams, tol: float = 1e-10, count: int = 50,
               rng: np.random.Generator | None = None):
    """theta_a(z + m tau) = mu_a e^{-pi i tau m^2 - 2 pi i m z} theta_a(z), both moduli."""
    from .reports import VerificationReport

    rng = rng or np.random.default_rng(0)
    z = _rand(rng, count)
    samples = []
    for modulus in (params.tau, 2 * params.eta):
        for a in (1, 2, 3, 4):
            for m in (-2, -1, 1, 2):
                mu = (-1) ** m if a in (1, 4) else 1
                lhs = theta_a(a, z + m * modulus, modulus)
                rhs = mu * np.exp(-1j * np.pi * modulus * m * m - TWO_PI_I * m * z) * theta_a(a, z, modulus)
                samples.extend(zip(z.tolist(), _rel(lhs, rhs).tolist()))
    return VerificationReport("Eq-mper", tol, samples)


def check_theta_identity(params: ModularParams, tol: float = 1e-10, count: int = 50,
                         rng: np.random.Generator | None = None):
    """2 theta1(x+y) theta1(x-y) = bar4(x) bar3(y) - bar4(y) bar3(x), bar_k = theta_k(.|tau/2)."""
    from .reports import VerificationReport

    rng = rng or np.random.default_rng(0)
    tau = params.tau
    x, y = _rand(rng, count), _rand(rng, count)

    def bar(k, u):
        return theta_a(k, u, tau / 2)

    lhs = 2 * theta1(x + y, tau) * theta1(x - y, tau)
    a, b = bar(4, x) * bar(3, y), bar(4, y) * bar(3, x)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(lhs))
    return VerificationReport("Eq-theta", tol, list(zip(x.tolist(), (np.abs(lhs - a + b) / scale).tolist())))


def check_gamma(params: ModularParams, tol: float = 1e-10, count: int = 50,
                rng: np.random.Generator | None = None):
    """Reflection and the two first-order shift equations of the elliptic gamma function."""
    from .reports import VerificationReport, merge

    rng = rng or np.random.default_rng(0)
    tau, eta = params.tau, params.eta
    z = _rand(rng, count, 0.5, 0.1)
    g = elliptic_gamma(z, params)
    refl = elliptic_gamma(tau + 2 * eta - z, params) * g
    s_eta = r_const(tau) * np.exp(1j * np.pi * z) * theta1(z, tau) * g
    s_tau = r_const(2 * eta) * np.exp(1j * np.pi * z) * theta1(z, 2 * eta) * g
    pts = z.tolist()
    parts = [
        VerificationReport("reflection", tol, list(zip(pts, _rel(refl, 1.0).tolist()))),
        VerificationReport("shift-2eta", tol,
                           list(zip(pts, _rel(elliptic_gamma(z + 2 * eta, params), s_eta).tolist()))),
        VerificationReport("shift-tau", tol,
                           list(zip(pts, _rel(elliptic_gamma(z + tau, params), s_tau).tolist()))),
    ]
    return merge("Eq-eqgamma", parts, tol)


def check_qpochhammer(params: ModularParams, tol: float = 1e-10, count: int = 50,
                      rng: np.random.Generator | None = None):
    """Products against a log-domain sum, and the theta(t;p) inversion/shift laws."""
    from .reports import VerificationReport, merge

    rng = rng or np.random.default_rng(0)
    p = params.p
    t = np.exp(TWO_PI_I * _rand(rng, count, 0.5, 0.15))
    k = np.arange(200)
    logsum = np.exp(np.log1p(-np.multiply.outer(t, p ** k)).sum(axis=-1))
    th = mult_theta(t, p)
    pts = t.tolist()
    parts = [
        VerificationReport("log-domain", tol, list(zip(pts, _rel(qpochhammer(t, p), logsum).tolist()))),
        VerificationReport("theta-shift", tol, list(zip(pts, _rel(mult_theta(p * t, p), -th / t).tolist()))),
        VerificationReport("theta-inversion", tol,
                           list(zip(pts, _rel(th, -t * mult_theta(1 / t, p)).tolist()))),
    ]
    return merge("Eq-qpoch", parts, tol)
