"""Finite-difference intertwiners on the lattices g = n eta + m tau/2 (+ 1/2).

Three independent constructions are provided and cross-checked:

* ``m_recursive``: ordered products of the first-order operators A_k, B_k
  followed by division by theta_k powers;
* ``m_closed``: the explicit single sums for the pure lattices (m = 0 or
  n = 0), with coefficients ``alpha_coeff``/``beta_coeff``;
* ``m_normal_ordered``: the double sum over all (n+1)(m+1) shifts.

``apply_factored`` evaluates the intertwiner on a product F*G of theta
functions of prescribed quasi-periodicity as a product of two brackets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import reports
from .operator_algebra import (
    AnalyticFn,
    DifferenceOperator,
    Lattice,
    annihilation_residual,
    base_poles,
    compose,
    gauge_conjugate,
    lincomb,
    sample_points,
    term_values,
    weak_check,
)
from .reports import VerificationReport
from .sklyanin import LatticeSpin, generators, spin_value
from .special_functions import (
    ModularParams,
    ParameterError,
    PoleError,
    elliptic_gamma,
    mult_theta,
    r_const,
    theta1,
    theta_a,
)

PI_I = 1j * np.pi

FORMS = ("recursive", "closed", "normal_ordered")


@dataclass(frozen=True)
class IntertwinerForm:
    form: str
    n: int
    m: int
    half: bool
    op: DifferenceOperator
    k: int | None = None

    @property
    def lattice(self) -> tuple[int, int, bool]:
        return (self.n, self.m, self.half)

    def label(self) -> str:
        return f"{self.form}(k={self.k})" if self.form == "recursive" else self.form


def c_A(params: ModularParams) -> complex:
    return complex(np.exp(PI_I * params.eta) / r_const(params.tau))


def c_B(params: ModularParams) -> complex:
    return complex(np.exp(PI_I * params.tau / 2) / r_const(2 * params.eta))


def _check_k(k: int) -> None:
    if k not in (3, 4):
        raise ParameterError(f"k must be 3 or 4, got {k}")


def _first_order(k: int, g: complex, h: complex, modulus: complex, kmod: complex,
                 c: complex, name: str) -> DifferenceOperator:
    # e^{z^2 pi i/h} c/theta1(2z) [theta_k(z+g+h) e^{h d} - theta_k(z-g-h) e^{-h d}] e^{-z^2 pi i/h}
    _check_k(k)
    den = AnalyticFn.theta(1, modulus, 2.0).reciprocal()
    plus = AnalyticFn.theta(k, kmod, 1.0, g + h) * AnalyticFn.exp_linear(-2 * PI_I, -PI_I * h)
    minus = AnalyticFn.theta(k, kmod, 1.0, -g - h) * AnalyticFn.exp_linear(2 * PI_I, -PI_I * h)
    return DifferenceOperator(((h, plus * den * c), (-h, minus * den * (-c))),
                              f"{name}{k}({g})")


def op_A(k: int, g, params: ModularParams) -> DifferenceOperator:
    """First-order operator with shifts +-eta raising the spin by eta."""
    g = spin_value(g)
    return _first_order(k, g, params.eta, params.tau, params.tau / 2, c_A(params), "A")


def op_B(k: int, g, params: ModularParams) -> DifferenceOperator:
    """First-order operator with shifts +-tau/2 raising the spin by tau/2."""
    g = spin_value(g)
    return _first_order(k, g, params.tau / 2, 2 * params.eta, params.eta, c_B(params), "B")


def _spin(n: int, m: int, half: bool, params: ModularParams) -> complex:
    return spin_value(LatticeSpin.at(n, m, half, params))


def _check_lattice(n: int, m: int) -> None:
    if n < 0 or m < 0 or int(n) != n or int(m) != m:
        raise ParameterError(f"lattice indices must be non-negative integers, got ({n}, {m})")


def m_recursive(n: int, m: int, half: bool, k: int, params: ModularParams) -> IntertwinerForm:
    """Product of n A_k and m B_k factors, divided by theta_k powers (and P if half)."""
    _check_lattice(n, m)
    _check_k(k)
    tau, eta = params.tau, params.eta
    base = 0.5 if half else 0.0
    op = DifferenceOperator.identity()
    for j in range(n - 1, -1, -1):
        op = compose(op, op_A(k, base + j * eta + m * tau / 2, params))
    for j in range(m - 1, -1, -1):
        op = compose(op, op_B(k, base + j * tau / 2, params))
    divisor = (AnalyticFn.theta(k, eta, 1.0, base) ** m) * (AnalyticFn.theta(k, tau / 2, 1.0, base) ** n)
    op = compose(op, DifferenceOperator.multiplication(divisor.reciprocal()))
    if half:
        op = compose(op, DifferenceOperator.shift(0.5))
    return IntertwinerForm("recursive", n, m, half, op, k)


# -- closed-form coefficients ------------------------------------------------------

def elliptic_binomial(n: int, l: int, params: ModularParams, multiplicative: bool = False,
                      dual: bool = False) -> complex:
    """Elliptic binomial coefficient [n, l] for (tau, 2 eta), or (2 eta, tau) if ``dual``."""
    if not 0 <= l <= n:
        raise ParameterError(f"need 0 <= l <= n, got l={l}, n={n}")
    step, modulus = (params.tau, 2 * params.eta) if dual else (2 * params.eta, params.tau)
    if not multiplicative:
        def prod(top):
            return np.prod([theta1(step * j, modulus) for j in range(1, top + 1)])
        return complex(prod(n) / (prod(l) * prod(n - l)))
    # (-1)^l q^{l(n+1)/2} prod theta(q^{b-n-1}; p)/theta(q^b; p), q -> e^{2 pi i step}
    nome = np.exp(2 * PI_I * modulus)
    out = (-1) ** l * np.exp(PI_I * step * l * (n + 1))
    for b in range(1, l + 1):
        out *= mult_theta(np.exp(2 * PI_I * step * (b - n - 1)), nome) / mult_theta(
            np.exp(2 * PI_I * step * b), nome)
    return complex(out)


def _coeff_fn(n: int, l: int, step: complex, modulus: complex, c: complex,
              binom: complex) -> AnalyticFn:
    # c^n [n,l] theta1(2z + step(n-2l)) / prod_{j=0}^n theta1(2z - step(l-j))
    num = AnalyticFn.theta(1, modulus, 2.0, step * (n - 2 * l))
    den = AnalyticFn.const(1.0)
    for j in range(n + 1):
        den = den * AnalyticFn.theta(1, modulus, 2.0, -step * (l - j))
    return num * den.reciprocal() * (c ** n * binom)


def alpha_fn(n: int, l: int, params: ModularParams) -> AnalyticFn:
    return _coeff_fn(n, l, 2 * params.eta, params.tau, c_A(params),
                     elliptic_binomial(n, l, params))


def beta_fn(m: int, l: int, params: ModularParams) -> AnalyticFn:
    return _coeff_fn(m, l, params.tau, 2 * params.eta, c_B(params),
                     elliptic_binomial(m, l, params, dual=True))


def _pole_check(val, what: str):
    if not np.all(np.isfinite(val)):
        raise PoleError(f"{what} evaluated at a pole")
    return val


def alpha_coeff(n: int, l: int, z, params: ModularParams):
    """alpha_l^{(n)}(z) of the eta-lattice intertwiner."""
    return _pole_check(alpha_fn(n, l, params)(z), "alpha_coeff")


def beta_coeff(m: int, l: int, z, params: ModularParams):
    """beta_l^{(m)}(z) of the tau/2-lattice intertwiner."""
    return _pole_check(beta_fn(m, l, params)(z), "beta_coeff")


def alpha_coeff_mult(n: int, l: int, z, params: ModularParams):
    """alpha_l^{(n)}(z) written with multiplicative theta functions of nome p."""
    eta, p = params.eta, params.p
    z = np.asarray(z, dtype=complex)
    Q = lambda x: np.exp(4 * PI_I * eta * x)  # noqa: E731  (q^x)
    w = np.exp(-4 * PI_I * z)
    den = 1.0
    for j in range(n + 1):
        den = den * mult_theta(Q(j) / w, p)
    out = ((-1) ** (l + 1) * Q(n * n / 4 + n * (l + 1)) * np.exp(2 * PI_I * (n + 2) * z) / den
           * mult_theta(w * Q(2 * l - n), p))
    for b in range(1, l + 1):
        out = out * (mult_theta(w * Q(b - n - 1), p) * mult_theta(Q(b - n - 1), p)
                     / (mult_theta(w * Q(b), p) * mult_theta(Q(b), p)))
    return _pole_check(out, "alpha_coeff_mult")


def alpha_recursion(n_max: int, k: int, z, params: ModularParams) -> list[np.ndarray]:
    """Level-by-level values alpha_l^{(n)}(z) produced by the k-dependent recursion.

    Returns a list whose entry n is the array over l = 0..n.  Values at
    z +- eta are needed at lower levels, so the recursion is evaluated on a
    stencil of shifted points.
    """
    _check_k(k)
    z = np.asarray(z, dtype=complex)
    eta, tau, cA = params.eta, params.tau, c_A(params)
    # table[n][d] holds alpha^{(n)} at z + d*eta for |d| <= n_max - n
    table = {0: {d: [np.ones_like(z)] for d in range(-n_max, n_max + 1)}}
    for n in range(n_max):
        reach = n_max - n - 1
        level = {}
        for d in range(-reach, reach + 1):
            x = z + d * eta
            pre = cA / theta1(2 * x, tau)
            prev_up, prev_dn = table[n][d + 1], table[n][d - 1]
            row = [pre * prev_up[0]]
            for l in range(1, n + 1):
                num = (theta_a(k, x + (n + 1) * eta, tau / 2) * prev_up[l]
                       + theta_a(k, x - (n + 1) * eta, tau / 2) * prev_dn[l - 1])
                row.append(pre * num / theta_a(k, x + (n + 1 - 2 * l) * eta, tau / 2))
            row.append(pre * prev_dn[n])
            level[d] = row
        table[n + 1] = level
    return [np.array(table[n][0]) for n in range(n_max + 1)]


# -- closed and normal-ordered operators -------------------------------------------

def _half(op: DifferenceOperator, half: bool) -> DifferenceOperator:
    return compose(op, DifferenceOperator.shift(0.5)) if half else op


def _pure_sum(count: int, step: complex, coeff: Callable[[int, int], AnalyticFn]
              ) -> DifferenceOperator:
    terms = tuple(((count - 2 * l) * step, coeff(count, l) * ((-1) ** l))
                  for l in range(count + 1))
    return DifferenceOperator(terms)


def m_closed(n: int, m: int, half: bool, params: ModularParams) -> IntertwinerForm:
    """Explicit single sum for the pure lattices n*eta or m*tau/2."""
    _check_lattice(n, m)
    if min(n, m) != 0:
        raise ParameterError("closed single-sum form needs n == 0 or m == 0; use m_normal_ordered")
    if m == 0:
        inner = _pure_sum(n, params.eta, lambda a, b: alpha_fn(a, b, params))
        op = gauge_conjugate(inner, PI_I / params.eta)
    else:
        inner = _pure_sum(m, params.tau / 2, lambda a, b: beta_fn(a, b, params))
        op = gauge_conjugate(inner, 2 * PI_I / params.tau)
    return IntertwinerForm("closed", n, m, half, _half(op, half))


def m_normal_ordered(n: int, m: int, half: bool, params: ModularParams) -> IntertwinerForm:
    """All (n+1)(m+1) shift terms with their explicit coefficients."""
    _check_lattice(n, m)
    eta, tau = params.eta, params.tau
    pre = (-1) ** (n * m) * np.exp(-PI_I * tau / 2 * m * m * n - PI_I * eta * n * n * m)
    terms = []
    for k in range(n + 1):
        a = alpha_fn(n, k, params)
        for l in range(m + 1):
            b = beta_fn(m, l, params)
            u, v = n - 2 * k, m - 2 * l
            # phase (n-1) v [pi i tau v/2 + 2 pi i (z + u eta)] + (m-1) u [pi i eta u + 2 pi i (z + v tau/2)]
            lin = 2 * PI_I * ((n - 1) * v + (m - 1) * u)
            const = ((n - 1) * v * (PI_I * tau * v / 2 + 2 * PI_I * u * eta)
                     + (m - 1) * u * (PI_I * eta * u + PI_I * v * tau))
            phase = AnalyticFn.exp_linear(lin, const)
            terms.append((u * eta + v * tau / 2, a * b * phase * (pre * (-1) ** (k + l))))
    op = DifferenceOperator(tuple(terms), f"Mno({n},{m})")
    return IntertwinerForm("normal_ordered", n, m, half, _half(op, half))


def build(form: str, n: int, m: int, half: bool, params: ModularParams, k: int = 3
          ) -> IntertwinerForm:
    if form == "recursive":
        return m_recursive(n, m, half, k, params)
    if form == "closed":
        return m_closed(n, m, half, params)
    if form in ("normal_ordered", "normal"):
        return m_normal_ordered(n, m, half, params)
    raise ValueError(f"unknown form {form!r}")


def m_factorized(n: int, m: int, params: ModularParams, order: str = "eta-first"
                 ) -> DifferenceOperator:
    """The product of the two gauge-dressed pure-lattice intertwiners, either order."""
    eta, tau = params.eta, params.tau
    pre = np.exp(-PI_I * tau / 2 * m * m * n - PI_I * eta * n * n * m)
    Mn = m_closed(n, 0, False, params).op
    Mm = m_closed(0, m, False, params).op
    a, b = PI_I * m / eta, 2 * PI_I * n / tau
    if order == "eta-first":
        # e^{a z^2} M(n eta) e^{-(a+b) z^2} M(m tau/2) e^{b z^2}
        left = gauge_conjugate(Mn, a)
        right = gauge_conjugate(Mm, -b)
    else:
        left = gauge_conjugate(Mm, b)
        right = gauge_conjugate(Mn, -a)
    return lincomb([pre], [compose(left, right)])


# -- factorized action on theta products ---------------------------------------------

log = logging.getLogger(__name__)


def _admissible(n: int, par: int) -> bool:
    return par in (-1, 0, 1) and (n - par) % 2 == 0


def admissible_parities(n: int) -> list[int]:
    return [a for a in (-1, 0, 1) if _admissible(n, a)]


def _spot_check(F: AnalyticFn, G: AnalyticFn, n: int, m: int, params: ModularParams) -> bool:
    tau, eta = params.tau, params.eta
    z = np.array([0.137 + 0.021j, 0.613 - 0.047j])
    N, M = n - 1, m - 1
    f_ok = np.allclose(F(z + tau), np.exp(-2 * N * (PI_I * tau + 2 * PI_I * z)) * F(z), rtol=1e-8)
    g_ok = np.allclose(G(z + 2 * eta), np.exp(-4 * M * (PI_I * eta + PI_I * z)) * G(z), rtol=1e-8)
    return bool(f_ok and g_ok)


def _mult_bracket(N: int, z, nome_x: Callable, nome: complex, par: int, H: AnalyticFn,
                  shift: Callable[[int], complex]):
    w = np.exp(-4 * PI_I * z)
    total = 0
    for k in range(N + 1):
        t = nome_x(k * N * (1 - par) + par * k) * mult_theta(w * nome_x(2 * k - N), nome)
        for b in range(1, k + 1):
            t = t * (mult_theta(w * nome_x(b - N - 1), nome) * mult_theta(nome_x(b - N - 1), nome)
                     / (mult_theta(w * nome_x(b), nome) * mult_theta(nome_x(b), nome)))
        total = total + t * H(z + shift(k))
    return total


def apply_factored(n: int, m: int, alpha: int, beta: int, F: AnalyticFn, G: AnalyticFn, z,
                   params: ModularParams, half: bool = False, multiplicative: bool = True,
                   spot_check: bool = True):
    """Value of M(n eta + m tau/2 [+1/2]) (F G) at z as a product of two brackets.

    F must transform like a theta function of order 2(n-1) and modulus tau,
    G like one of order 2(m-1) and modulus 2 eta.  ``alpha`` and ``beta``
    are parity labels in {-1, 0, 1} with n - alpha and m - beta even; the
    result does not depend on the admissible choice.
    """
    if n < 1 or m < 1:
        raise ParameterError("apply_factored needs n, m >= 1")
    if not (_admissible(n, alpha) and _admissible(m, beta)):
        raise ParameterError(f"parity violation: need n-alpha, m-beta even, got "
                             f"n={n}, alpha={alpha}, m={m}, beta={beta}")
    if half:
        F, G = F.shifted(0.5), G.shifted(0.5)
    if spot_check and not _spot_check(F, G, n, m, params):
        log.warning("apply_factored: F or G fails the declared quasi-periodicity spot check")
    z = np.asarray(z, dtype=complex)
    tau, eta, p, q = params.tau, params.eta, params.p, params.q
    if multiplicative:
        Q = lambda x: np.exp(4 * PI_I * eta * x)  # noqa: E731  (q^x)
        Pn = lambda x: np.exp(2 * PI_I * tau * x)  # noqa: E731  (p^x)
        W = np.exp(4 * PI_I * z)
        pre = (-1) ** (n * m) * np.exp(2 * PI_I * z * (n + m + 4 + alpha * (m - 1) + beta * (n - 1)))
        den_q = np.prod([mult_theta(W * Q(j), p) for j in range(n + 1)], axis=0)
        den_p = np.prod([mult_theta(W * Pn(j), q) for j in range(m + 1)], axis=0)
        pre = pre * Q((n * n - alpha ** 2) * (1 - m) / 4 + beta * n * (n - 1) / 2 + n) / den_q
        pre = pre * Pn((m * m - beta ** 2) * (1 - n) / 4 + alpha * m * (m - 1) / 2 + m) / den_p
        b1 = _mult_bracket(n, z, Q, p, beta, F, lambda k: beta * tau / 2 + (n - 2 * k) * eta)
        b2 = _mult_bracket(m, z, Pn, q, alpha, G, lambda l: alpha * eta + (m - 2 * l) * tau / 2)
        return pre * b1 * b2
    pre = (-1) ** (n * m) * np.exp(-PI_I * tau / 2 * m * m * n - PI_I * eta * n * n * m)
    b1 = sum((-1) ** k * alpha_coeff(n, k, z, params) * np.exp(-4 * PI_I * eta * beta * (n - 1) * k)
             * F(z + beta * tau / 2 + (n - 2 * k) * eta) for k in range(n + 1))
    b1 = b1 * np.exp(PI_I * tau / 2 * beta ** 2 * (n - 1) + 2 * PI_I * eta * beta * (n - 1) * n
                     + 2 * PI_I * beta * (n - 1) * z)
    b2 = sum((-1) ** l * beta_coeff(m, l, z, params) * np.exp(-2 * PI_I * tau * alpha * (m - 1) * l)
             * G(z + alpha * eta + (m - 2 * l) * tau / 2) for l in range(m + 1))
    b2 = b2 * np.exp(PI_I * eta * alpha ** 2 * (m - 1) + PI_I * tau * alpha * (m - 1) * m
                     + 2 * PI_I * alpha * (m - 1) * z)
    return pre * b1 * b2


def random_theta_product(order: int, modulus: complex, rng: np.random.Generator) -> AnalyticFn:
    """``prod_i theta1(z - a_i | modulus)`` over ``order`` random a_i summing to zero.

    It is 1-periodic and picks up ``e^{-order (pi i T + 2 pi i z)}`` under
    z -> z + T, i.e. the law required of F_{order/2} (or G) above.
    """
    a = rng.uniform(-0.3, 0.3, order) + 1j * rng.uniform(-0.1, 0.1, order)
    if order:
        a = a - a.mean()
    fns = [AnalyticFn.theta(1, modulus, 1.0, -ai) for ai in a]
    out = AnalyticFn.const(1.0)
    for f in fns:
        out = out * f
    return AnalyticFn(out.fn, f"thetaprod{order}[{modulus}]")


# -- verification ---------------------------------------------------------------

def _points(rng: np.random.Generator, count: int, params: ModularParams,
            extra: tuple[Lattice, ...] = ()) -> np.ndarray:
    return sample_points(rng, count, base_poles(params) + extra, margin=0.02)


def check_forms(n: int, m: int, half: bool, params: ModularParams, tol: float = 1e-8,
                rng: np.random.Generator | None = None, n_points: int = 10,
                n_probes: int = 3) -> VerificationReport:
    """recursive(3) = recursive(4) = normal-ordered (= closed when m*n == 0)."""
    rng = rng or np.random.default_rng(0)
    ref = m_normal_ordered(n, m, half, params)
    others = [m_recursive(n, m, half, 3, params), m_recursive(n, m, half, 4, params)]
    if min(n, m) == 0:
        others.append(m_closed(n, m, half, params))
    parts = [weak_check(f"{o.label()}=normal_ordered({n},{m},{half})", o.op, ref.op, params,
                        tol, rng, n_probes=n_probes, n_points=n_points)
             for o in others]
    return reports.merge("Eq-Snm", parts, tol)


def check_first_order(params: ModularParams, tol: float = 1e-10,
                      rng: np.random.Generator | None = None) -> VerificationReport:
    """Half-period swaps A_{3,4}(g+1/2) = A_{4,3}(g), B likewise, and A_k(-eta) structure."""
    rng = rng or np.random.default_rng(0)
    g = complex(rng.uniform(-0.3, 0.3) + 1j * rng.uniform(-0.1, 0.1))
    parts = []
    for k, kk in ((3, 4), (4, 3)):
        parts.append(weak_check(f"A{k}(g+1/2)=A{kk}(g)", op_A(k, g + 0.5, params),
                                op_A(kk, g, params), params, tol, rng, 3, 8))
        parts.append(weak_check(f"B{k}(g+1/2)=B{kk}(g)", op_B(k, g + 0.5, params),
                                op_B(kk, g, params), params, tol, rng, 3, 8))
    # A_k(-eta) = theta_k(z|tau/2) c_A / theta1(2z) e^{pi i z^2/eta}(e^{eta d} - e^{-eta d})e^{-pi i z^2/eta}
    diff = DifferenceOperator(((params.eta, AnalyticFn.const(1.0)), (-params.eta, AnalyticFn.const(-1.0))))
    for k in (3, 4):
        pref = (AnalyticFn.theta(k, params.tau / 2) * AnalyticFn.theta(1, params.tau, 2.0).reciprocal()
                * c_A(params))
        rhs = gauge_conjugate(compose(DifferenceOperator.multiplication(pref), diff),
                              PI_I / params.eta)
        parts.append(weak_check(f"A{k}(-eta)", op_A(k, -params.eta, params), rhs, params, tol,
                                rng, 3, 8))
    return reports.merge("Eq-Ak", parts, tol)


def check_pure_examples(params: ModularParams, tol: float = 1e-10,
                        rng: np.random.Generator | None = None) -> VerificationReport:
    """The one- and two-step eta-lattice operators in explicit form."""
    rng = rng or np.random.default_rng(0)
    eta, tau = params.eta, params.tau
    cA = c_A(params)
    inv = AnalyticFn.theta(1, tau, 2.0).reciprocal()
    one = AnalyticFn.const(1.0)
    parts = []
    meta = DifferenceOperator(((eta, inv * cA), (-eta, inv * (-cA))))
    for k in (3, 4):
        W = gauge_conjugate(m_recursive(1, 0, False, k, params).op, -PI_I / eta)
        parts.append(weak_check(f"W(eta),k={k}", W, meta, params, tol, rng, 3, 8))
    den = (AnalyticFn.theta(1, tau, 2.0, -2 * eta) * AnalyticFn.theta(1, tau, 2.0)
           * AnalyticFn.theta(1, tau, 2.0, 2 * eta)).reciprocal() * (cA * cA)
    mid = -theta1(4 * eta, tau) / theta1(2 * eta, tau)
    two = DifferenceOperator((
        (2 * eta, den * AnalyticFn.theta(1, tau, 2.0, -2 * eta)),
        (0j, den * AnalyticFn.theta(1, tau, 2.0) * mid),
        (-2 * eta, den * AnalyticFn.theta(1, tau, 2.0, 2 * eta)),
    ))
    W2 = gauge_conjugate(m_closed(2, 0, False, params).op, -PI_I / eta)
    parts.append(weak_check("W(2eta)", W2, two, params, tol, rng, 3, 8))
    del one
    return reports.merge("Eq-meta", parts, tol)


def check_alpha(params: ModularParams, tol: float = 1e-10, n_max: int = 5,
                rng: np.random.Generator | None = None) -> VerificationReport:
    """Closed alpha coefficients against the k-recursion, the multiplicative
    form, and the boundary values; elliptic binomials in both notations."""
    rng = rng or np.random.default_rng(0)
    z = _points(rng, 20, params)
    parts = []
    for k in (3, 4):
        rec = alpha_recursion(n_max, k, z, params)
        samples = []
        for n in range(n_max + 1):
            for l in range(n + 1):
                ref = alpha_coeff(n, l, z, params)
                samples.extend(zip(z.tolist(), (np.abs(rec[n][l] - ref) / np.abs(ref)).tolist()))
        parts.append(VerificationReport(f"recrel(k={k})", tol, samples))
    samples = []
    for n in range(n_max + 1):
        for l in range(n + 1):
            ref = alpha_coeff(n, l, z, params)
            res = np.abs(alpha_coeff_mult(n, l, z, params) - ref) / np.abs(ref)
            samples.extend(zip(z.tolist(), res.tolist()))
    parts.append(VerificationReport("alpha-multiplicative", tol, samples))
    samples = []
    cA = c_A(params)
    for n in range(n_max + 1):
        lo = cA ** n / np.prod([theta1(2 * z + 2 * params.eta * j, params.tau) for j in range(n)], axis=0)
        hi = cA ** n / np.prod([theta1(2 * z - 2 * params.eta * j, params.tau) for j in range(n)], axis=0)
        for l, ref in ((0, lo), (n, hi)):
            res = np.abs(alpha_coeff(n, l, z, params) - ref) / np.abs(ref)
            samples.extend(zip(z.tolist(), res.tolist()))
    parts.append(VerificationReport("alpha-boundary", tol, samples))
    samples = []
    for n in range(n_max + 1):
        for l in range(n + 1):
            for dual in (False, True):
                a = elliptic_binomial(n, l, params, dual=dual)
                b = elliptic_binomial(n, l, params, multiplicative=True, dual=dual)
                sym = elliptic_binomial(n, n - l, params, dual=dual)
                samples.append(((n, l, dual), abs(a - b) / abs(a)))
                samples.append(((n, l, dual, "sym"), abs(a - sym) / abs(a)))
    parts.append(VerificationReport("binomial", tol, samples))
    return reports.merge("Eq-alpha", parts, tol)


def check_factorization(n: int, m: int, params: ModularParams, tol: float = 1e-8,
                        rng: np.random.Generator | None = None) -> VerificationReport:
    """Both orderings of the gauge-dressed product, and the conjugation identity."""
    rng = rng or np.random.default_rng(0)
    ref = m_normal_ordered(n, m, False, params).op
    parts = [weak_check(f"M=MM[{order}]({n},{m})", m_factorized(n, m, params, order), ref,
                        params, tol, rng, 3, 8) for order in ("eta-first", "tau-first")]
    Mm = m_closed(0, m, False, params).op
    for k in (3, 4):
        th = AnalyticFn.theta(k, params.tau / 2)
        lhs = compose(compose(DifferenceOperator.multiplication(th ** n), Mm),
                      DifferenceOperator.multiplication(th ** (-n)))
        sign = (-1) ** (m * n * (k == 4))
        rhs = lincomb([sign], [gauge_conjugate(Mm, -2 * PI_I * n / params.tau)])
        parts.append(weak_check(f"Mconj(k={k},{n},{m})", lhs, rhs, params, tol, rng, 3, 8))
    return reports.merge("Eq-M=MM", parts, tol)


def check_intertwining(n: int, m: int, half: bool, params: ModularParams, tol: float = 1e-8,
                       rng: np.random.Generator | None = None) -> VerificationReport:
    """M S^a(g) = S^a(-g) M and the same for St^a, at a lattice spin g."""
    rng = rng or np.random.default_rng(0)
    M = m_normal_ordered(n, m, half, params).op
    g = _spin(n, m, half, params)
    parts = []
    for tilde in (False, True):
        Sp, Sm = generators(g, params, tilde), generators(-g, params, tilde)
        for a in range(4):
            lhs, rhs = compose(M, Sp[a]), compose(Sm[a], M)
            name = f"{'St' if tilde else 'S'}{a}"
            parts.append(weak_check(f"{name}({n},{m},{half})", lhs, rhs, params, tol, rng, 3, 8,
                                    parts=[lhs, rhs]))
    return reports.merge("Eq-inter1", parts, tol)


def check_half_lattice(n: int, m: int, params: ModularParams, tol: float = 1e-8,
                       rng: np.random.Generator | None = None) -> VerificationReport:
    """M^{(3,4)}(g + 1/2) = M^{(4,3)}(g) P on the recursive forms."""
    rng = rng or np.random.default_rng(0)
    P = DifferenceOperator.shift(0.5)
    parts = []
    for k, kk in ((3, 4), (4, 3)):
        lhs = m_recursive(n, m, True, k, params).op
        rhs = compose(m_recursive(n, m, False, kk, params).op, P)
        parts.append(weak_check(f"M{k}(g+1/2)=M{kk}(g)P({n},{m})", lhs, rhs, params, tol, rng, 3, 8))
    return reports.merge("Eq-inter1/2", parts, tol)


def q_elliptic_ratio(a: complex, b: complex, params: ModularParams) -> AnalyticFn:
    """``theta(a Z^{+-1}; q) / theta(b Z^{+-1}; q)``: 1- and 2 eta-periodic in z."""
    q = params.q

    def fn(z):
        Z = np.exp(2 * PI_I * z)
        return (mult_theta(a * Z, q) * mult_theta(a / Z, q)
                / (mult_theta(b * Z, q) * mult_theta(b / Z, q)))

    # zeros of theta(b Z^{+-1}; q) in z: b Z = q^k or b/Z = q^k
    beta = np.log(complex(b)) / (2 * PI_I)
    poles = (Lattice(-beta, 1.0, 2 * params.eta), Lattice(beta, 1.0, 2 * params.eta))
    return AnalyticFn(fn, f"qratio({a},{b})", poles=poles)


def check_quasic(params: ModularParams, tol: float = 1e-9,
                 rng: np.random.Generator | None = None) -> VerificationReport:
    """W(eta) annihilates 2 eta-periodic functions."""
    rng = rng or np.random.default_rng(0)
    W = gauge_conjugate(m_normal_ordered(1, 0, False, params).op, -PI_I / params.eta)
    samples = []
    for a, b in ((np.exp(2j * np.pi * 0.13), np.exp(2j * np.pi * 0.37)), (0.7 + 0.2j, 1.3 - 0.4j)):
        psi = q_elliptic_ratio(a, b, params)
        avoid = tuple(pl.shifted(-s) for s in W.shifts for pl in psi.poles)
        z = _points(rng, 10, params, avoid)
        samples.extend(zip(z.tolist(), annihilation_residual(W, psi, z).tolist()))
    return VerificationReport("Eq-quasic", tol, samples)


def check_factored(n: int, m: int, params: ModularParams, tol: float = 1e-8,
                   rng: np.random.Generator | None = None, half: bool = False
                   ) -> VerificationReport:
    """Factorized action (additive and multiplicative, every admissible parity)
    against the normal-ordered operator applied to F G.  Residuals are
    relative to the largest single term of the operator sum."""
    rng = rng or np.random.default_rng(0)
    F = random_theta_product(2 * (n - 1), params.tau, rng)
    G = random_theta_product(2 * (m - 1), 2 * params.eta, rng)
    FG = F * G
    op = m_normal_ordered(n, m, half, params).op
    z = _points(rng, 10, params)
    terms = term_values(op, FG, z)
    ref = terms.sum(axis=0)
    scale = np.maximum(np.abs(terms).max(axis=0), 1e-300)
    samples = []
    for al in admissible_parities(n):
        for be in admissible_parities(m):
            for mult in (False, True):
                val = apply_factored(n, m, al, be, F, G, z, params, half=half, multiplicative=mult)
                samples.extend(zip(z.tolist(), (np.abs(val - ref) / scale).tolist()))
    zero = []
    for j in range(n):
        for l in range(m):
            Fz = AnalyticFn.theta(3, params.tau / 2) ** j * AnalyticFn.theta(4, params.tau / 2) ** (n - 1 - j)
            Gz = AnalyticFn.theta(3, params.eta) ** l * AnalyticFn.theta(4, params.eta) ** (m - 1 - l)
            sc = np.maximum(np.abs(term_values(op, Fz * Gz, z)).max(axis=0), 1e-300)
            val = apply_factored(n, m, n % 2, m % 2, Fz, Gz, z, params, half=half)
            zero.extend(zip(z.tolist(), (np.abs(val) / sc).tolist()))
    parts = [VerificationReport(f"factored=normal_ordered({n},{m},{half})", tol, samples),
             VerificationReport(f"factored(zero modes)({n},{m},{half})", tol, zero)]
    rep = reports.merge("Eq-answ4m", parts, tol)
    rep.notes["lattice"] = [n, m, half]
    return rep


def _rand_c(rng: np.random.Generator, size: int, re: float = 0.4, im: float = 0.1) -> np.ndarray:
    return rng.uniform(-re, re, size) + 1j * rng.uniform(-im, im, size)


def check_id2(params: ModularParams, tol: float = 1e-9, count: int = 30,
              rng: np.random.Generator | None = None) -> VerificationReport:
    """Three-term theta identity behind the contiguous relation, at random (z, x, g)."""
    rng = rng or np.random.default_rng(0)
    tau, eta = params.tau, params.eta
    z, x, g = (_rand_c(rng, count) for _ in range(3))
    samples = []
    for k in (3, 4):
        tb = lambda u: theta_a(k, u, tau / 2)  # noqa: E731
        lhs = tb(z + g + eta) * theta1(z - eta - g + x, tau) * theta1(z - eta - g - x, tau)
        rhs = tb(z - g - eta) * theta1(z + eta + g + x, tau) * theta1(z + eta + g - x, tau)
        res = theta1(2 * z, tau) * theta1(-2 * g - 2 * eta, tau) * tb(x)
        scale = np.maximum(np.maximum(abs(lhs), abs(rhs)), abs(res))
        samples.extend(zip(z.tolist(), (np.abs(lhs - rhs - res) / scale).tolist()))
    return VerificationReport("Eq-id2", tol, samples)


def check_dualeqn(params: ModularParams, tol: float = 1e-9, count: int = 20,
                  rng: np.random.Generator | None = None) -> VerificationReport:
    """Pointwise integrand identity behind the dual contiguous relation.

    The two shifted kernels are normalised by the kernel at g + eta; with
    that normalisation the difference is x-independent and equals
    ``Gamma(-2g)/Gamma(-2g-2eta) theta_k(z|tau/2)``.
    """
    rng = rng or np.random.default_rng(0)
    tau, eta = params.tau, params.eta
    R = r_const(tau)
    Gm = lambda u: elliptic_gamma(u, params)  # noqa: E731

    def g4(z, x, g):
        return Gm(z + x - g) * Gm(z - x - g) * Gm(-z + x - g) * Gm(-z - x - g)

    def g2(x):
        return Gm(2 * x) * Gm(-2 * x)

    z, x, g = (_rand_c(rng, count) for _ in range(3))
    samples = []
    for k in (3, 4):
        tb = lambda u: theta_a(k, u, tau / 2)  # noqa: E731
        base = g4(z, x, g + eta)
        a = (g4(z, x - eta, g) * g2(x) / (base * g2(x - eta)) * np.exp(2 * PI_I * (eta - x))
             / (R * theta1(2 * x - 2 * eta, tau)) * tb(x - g - eta))
        b = (g4(z, x + eta, g) * g2(x) / (base * g2(x + eta)) * np.exp(2 * PI_I * (eta + x))
             / (R * theta1(2 * x + 2 * eta, tau)) * tb(x + g + eta))
        rhs = Gm(-2 * g) / Gm(-2 * g - 2 * eta) * tb(z)
        scale = np.maximum(np.maximum(abs(a), abs(b)), abs(rhs))
        samples.extend(zip(z.tolist(), (np.abs(a - b - rhs) / scale).tolist()))
    return VerificationReport("Eq-dualeqn", tol, samples)
