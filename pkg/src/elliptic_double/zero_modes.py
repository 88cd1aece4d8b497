"""Zero modes of the lattice intertwiners and their invariance under the double.

For g = n eta + m tau/2 the nm products

    phi_{j,l}(z) = theta_3^j theta_4^{n-1-j}(z|tau/2) * theta_3^l theta_4^{m-1-l}(z|eta)

span the kernel studied here.  They are annihilated by the normal-ordered
intertwiner and the span is mapped into itself by all eight generators
S^a(g), St^a(g).  The half-shifted lattice uses the same set: the shift by
1/2 swaps theta_3 and theta_4 in both factors, i.e. (j, l) -> (n-1-j, m-1-l).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import reports
from .intertwiner import m_normal_ordered, q_elliptic_ratio
from .operator_algebra import (
    AnalyticFn,
    DifferenceOperator,
    Lattice,
    annihilation_residual,
    base_poles,
    gauge_function,
    sample_points,
    term_values,
)
from .reports import VerificationReport
from .sklyanin import LatticeSpin, generators
from .special_functions import ModularParams, ParameterError, mult_theta, theta_a

log = logging.getLogger(__name__)

TWO_PI_I = 2j * np.pi
COND_LIMIT = 1e8
MAX_RESAMPLES = 5
BASIS_H_A = complex(np.exp(TWO_PI_I * 0.13))
BASIS_H_B = complex(np.exp(TWO_PI_I * 0.37))


class RankDeficiencyError(ArithmeticError):
    """The sampled basis matrix stays ill-conditioned after every resample."""


@dataclass(frozen=True)
class ThetaMonomial:
    n: int
    m: int
    j: int
    l: int  # noqa: E741
    value: AnalyticFn

    def __call__(self, z):
        return self.value(z)


def _monomial(j: int, jn: int, l: int, ln: int, params: ModularParams) -> AnalyticFn:
    tau, eta = params.tau, params.eta

    def fn(z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        if j:
            out = out * theta_a(3, z, tau / 2) ** j
        if jn:
            out = out * theta_a(4, z, tau / 2) ** jn
        if l:
            out = out * theta_a(3, z, eta) ** l
        if ln:
            out = out * theta_a(4, z, eta) ** ln
        return out

    return AnalyticFn(fn, f"th3^{j}th4^{jn}(tau/2)th3^{l}th4^{ln}(eta)")


def basis_phi(n: int, m: int, params: ModularParams) -> list[ThetaMonomial]:
    """The nm monomials, ordered lexicographically in (j, l)."""
    if n < 1 or m < 1:
        raise ParameterError(f"basis_phi needs n, m >= 1, got ({n}, {m})")
    return [ThetaMonomial(n, m, j, l, _monomial(j, n - 1 - j, l, m - 1 - l, params))
            for j in range(n) for l in range(m)]


def basis_single(n: int, params: ModularParams) -> list[AnalyticFn]:
    """theta_3^j theta_4^{n-1-j}(z|tau/2): the invariant space for g = n eta alone."""
    return [_monomial(j, n - 1 - j, 0, 0, params) for j in range(n)]


def half_shuffle(n: int, m: int) -> list[int]:
    """Index map of phi under z -> z + 1/2 in the lexicographic order."""
    return [(n - 1 - j) * m + (m - 1 - l) for j in range(n) for l in range(m)]


def theta_square_decompose(k: int, x, y, params: ModularParams):
    """The two right-hand pieces (A, B) with 2 theta_k(x+y) theta_k(x-y) = A + B.

    Moduli: theta_k has tau, the pieces are products of theta_{3,4}(.|tau/2).
    """
    tb = lambda a, u: theta_a(a, u, params.tau / 2)  # noqa: E731
    if k == 1:
        return tb(4, x) * tb(3, y), -tb(4, y) * tb(3, x)
    if k == 2:
        return tb(3, x) * tb(3, y), -tb(4, y) * tb(4, x)
    if k == 3:
        return tb(3, x) * tb(3, y), tb(4, y) * tb(4, x)
    if k == 4:
        return tb(4, x) * tb(3, y), tb(4, y) * tb(3, x)
    raise ValueError(f"theta index must be 1..4, got {k}")


def check_theta_squares(params: ModularParams, tol: float = 1e-10, count: int = 50,
                        rng: np.random.Generator | None = None) -> VerificationReport:
    rng = rng or np.random.default_rng(0)
    x = rng.uniform(-0.5, 0.5, count) + 1j * rng.uniform(-0.2, 0.2, count)
    y = rng.uniform(-0.5, 0.5, count) + 1j * rng.uniform(-0.2, 0.2, count)
    samples = []
    for k in (1, 2, 3, 4):
        lhs = 2 * theta_a(k, x + y, params.tau) * theta_a(k, x - y, params.tau)
        a, b = theta_square_decompose(k, x, y, params)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(lhs))
        samples.extend(zip(x.tolist(), (np.abs(lhs - a - b) / scale).tolist()))
    return VerificationReport("Eq-33", tol, samples)


# -- periodic multipliers ------------------------------------------------------

def p_elliptic_ratio(a: complex, b: complex, params: ModularParams) -> AnalyticFn:
    """``theta(a Z^{+-1}; p) / theta(b Z^{+-1}; p)``: tau-periodic in z."""
    p = params.p

    def fn(z):
        Z = np.exp(TWO_PI_I * np.asarray(z, dtype=complex))
        return (mult_theta(a * Z, p) * mult_theta(a / Z, p)
                / (mult_theta(b * Z, p) * mult_theta(b / Z, p)))

    beta = np.log(complex(b)) / TWO_PI_I
    poles = (Lattice(-beta, 1.0, params.tau), Lattice(beta, 1.0, params.tau))
    return AnalyticFn(fn, f"pratio({a},{b})", poles=poles)


def default_multipliers(params: ModularParams) -> dict[str, AnalyticFn]:
    return {
        "2eta-periodic": q_elliptic_ratio(BASIS_H_A, BASIS_H_B, params),
        "tau-periodic": p_elliptic_ratio(BASIS_H_A, BASIS_H_B, params),
    }


def _points_for(op: DifferenceOperator, f: AnalyticFn, params: ModularParams,
                rng: np.random.Generator, count: int) -> np.ndarray:
    avoid = base_poles(params) + op.poles() + tuple(
        pl.shifted(-s) for s in op.shifts for pl in f.poles)
    return sample_points(rng, count, avoid, margin=0.02)


def check_annihilation(n: int, m: int, half: bool, params: ModularParams,
                       multiplier: AnalyticFn | None = None, tol: float = 1e-8,
                       rng: np.random.Generator | None = None, count: int = 20
                       ) -> VerificationReport:
    """M phi_{j,l} = 0 for every basis element (times an optional periodic multiplier).

    Residuals are |sum of terms| / max |term|.
    """
    rng = rng or np.random.default_rng(0)
    op = m_normal_ordered(n, m, half, params).op
    samples = []
    per_element = {}
    for phi in basis_phi(n, m, params):
        f = phi.value if multiplier is None else phi.value * multiplier
        z = _points_for(op, f, params, rng, count)
        res = annihilation_residual(op, f, z)
        per_element[f"{phi.j},{phi.l}"] = reports.fmt(res.max())
        samples.extend(zip(z.tolist(), res.tolist()))
    rep = VerificationReport("Eq-Mphi", tol, samples)
    rep.notes.update(lattice=[n, m, half], per_element=per_element,
                     multiplier=None if multiplier is None else multiplier.descriptor)
    if half:
        rep.notes["shuffle"] = half_shuffle(n, m)
    return rep


def check_half_shuffle(n: int, m: int, params: ModularParams, tol: float = 1e-12,
                       rng: np.random.Generator | None = None) -> VerificationReport:
    """phi_{j,l}(z + 1/2) = phi_{n-1-j, m-1-l}(z)."""
    rng = rng or np.random.default_rng(0)
    basis = basis_phi(n, m, params)
    z = sample_points(rng, 10, ())
    samples = []
    for phi, target in zip(basis, half_shuffle(n, m)):
        a, b = phi(z + 0.5), basis[target](z)
        samples.extend(zip(z.tolist(), (np.abs(a - b) / np.maximum(np.abs(b), 1e-300)).tolist()))
    return VerificationReport("half-shuffle", tol, samples)


# -- decomposition -------------------------------------------------------------

def _design(fns, z):
    return np.stack([f(z) for f in fns], axis=1)


def _well_conditioned(fns, rng, count, avoid=()):
    for _ in range(MAX_RESAMPLES):
        z = sample_points(rng, count, avoid, margin=0.02)
        A = _design(fns, z)
        if np.linalg.cond(A) <= COND_LIMIT:
            return z, A
        log.warning("ill-conditioned basis sample (cond > %.0e); resampling", COND_LIMIT)
    raise RankDeficiencyError("basis matrix ill-conditioned after resampling")


def decompose(f, fns, rng: np.random.Generator, count: int | None = None, avoid=()):
    """Least-squares coefficients of f in the span of ``fns`` and the relative residual."""
    count = count or 3 * len(fns)
    z, A = _well_conditioned(fns, rng, count, avoid)
    b = f(z)
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = np.linalg.norm(A @ c - b) / max(np.linalg.norm(b), 1e-300)
    return c, float(res)


def decompose_in_basis(f, n: int, m: int, params: ModularParams,
                       rng: np.random.Generator | None = None, count: int | None = None):
    """Coefficients (lexicographic (j, l)) of f in the phi basis, and the residual."""
    rng = rng or np.random.default_rng(0)
    fns = [phi.value for phi in basis_phi(n, m, params)]
    return decompose(f, fns, rng, max(count or 3 * n * m, 2 * n * m), base_poles(params))


def numerical_rank(n: int, m: int, params: ModularParams, rng=None, rtol: float = 1e-10) -> int:
    rng = rng or np.random.default_rng(0)
    fns = [phi.value for phi in basis_phi(n, m, params)]
    z = sample_points(rng, 3 * n * m, base_poles(params), margin=0.02)
    s = np.linalg.svd(_design(fns, z), compute_uv=False)
    return int(np.sum(s > rtol * s[0]))


# -- invariance ------------------------------------------------------------------

def _invariance(fns, g, params, rng, which=("S", "St")):
    avoid = base_poles(params)
    z, A = _well_conditioned(fns, rng, 3 * len(fns), avoid)
    out = []
    for tilde in (False, True):
        name = "St" if tilde else "S"
        if name not in which:
            continue
        for a, gen in enumerate(generators(g, params, tilde)):
            for i, f in enumerate(fns):
                terms = term_values(gen, f, z)
                b = terms.sum(axis=0)
                c, *_ = np.linalg.lstsq(A, b, rcond=None)
                # the image may vanish identically; measure against the summands
                scale = max(np.linalg.norm(b), np.linalg.norm(np.abs(terms).max(axis=0)), 1e-300)
                res = np.linalg.norm(A @ c - b) / scale
                out.append((f"{name}{a}", i, float(res)))
    return out


def check_invariance(n: int, m: int, params: ModularParams, tol: float = 1e-7,
                     rng: np.random.Generator | None = None, half: bool = False
                     ) -> list[VerificationReport]:
    """One report per generator: projection residual of S phi onto span(phi)."""
    rng = rng or np.random.default_rng(0)
    g = LatticeSpin.at(n, m, half, params)
    fns = [phi.value for phi in basis_phi(n, m, params)]
    rows = _invariance(fns, g, params, rng)
    out = []
    for name in [f"{s}{a}" for s in ("S", "St") for a in range(4)]:
        samples = [(i, r) for nm, i, r in rows if nm == name]
        rep = VerificationReport("Da-invariance", tol, samples)
        rep.notes.update(generator=name, lattice=[n, m, half])
        out.append(rep)
    return out


def single_lattice_failure(n: int, params: ModularParams, rng=None) -> dict[str, float]:
    """For g = n eta: S keeps span(e^{pi i z^2/eta} theta_3^j theta_4^{n-1-j}(.|tau/2)),
    St does not.

    Returns the largest projection residual per family; the St value is
    expected to be O(1).
    """
    rng = rng or np.random.default_rng(0)
    g = LatticeSpin.at(n, 0, False, params)
    fns = [zmneta_gauge(n, j, params) for j in range(n)]
    rows = _invariance(fns, g, params, rng)
    return {"S": max(r for nm, _, r in rows if nm.startswith("S") and not nm.startswith("St")),
            "St": max(r for nm, _, r in rows if nm.startswith("St"))}


def uniqueness_probe(n: int, m: int, params: ModularParams, rng=None) -> float:
    """Largest projection residual after multiplying the basis by an eta-periodic,
    non-constant function; invariance should break."""
    rng = rng or np.random.default_rng(0)
    half_q = complex(np.exp(TWO_PI_I * params.eta))

    def psi(z):
        Z = np.exp(TWO_PI_I * np.asarray(z, dtype=complex))
        a, b = BASIS_H_A, BASIS_H_B
        return (mult_theta(a * Z, half_q) * mult_theta(a / Z, half_q)
                / (mult_theta(b * Z, half_q) * mult_theta(b / Z, half_q)))

    psi_fn = AnalyticFn(psi, "eta-periodic")
    fns = [phi.value * psi_fn for phi in basis_phi(n, m, params)]
    g = LatticeSpin.at(n, m, False, params)
    return max(r for _, _, r in _invariance(fns, g, params, rng))


# -- single-lattice zero modes ---------------------------------------------------

def zmneta_gauge(n: int, j: int, params: ModularParams, psi: AnalyticFn | None = None) -> AnalyticFn:
    """e^{pi i z^2/eta} theta_3^j theta_4^{n-1-j}(z|tau/2) psi(z)."""
    f = gauge_function(np.pi * 1j / params.eta) * _monomial(j, n - 1 - j, 0, 0, params)
    return f if psi is None else f * psi


def zmneta_periodic(n: int, j: int, params: ModularParams, chi: AnalyticFn | None = None
                    ) -> AnalyticFn:
    """theta_3^j theta_4^{n-1-j}(z|tau/2) / theta(q^{-1/4} Z^{+-1}; q), times chi(Z)."""
    q = params.q
    c = complex(np.exp(-1j * np.pi * params.eta))  # q^{-1/4}

    def den(z):
        Z = np.exp(TWO_PI_I * np.asarray(z, dtype=complex))
        return 1 / (mult_theta(c * Z, q) * mult_theta(c / Z, q))

    poles = (Lattice(params.eta / 2, 1.0, 2 * params.eta), Lattice(-params.eta / 2, 1.0, 2 * params.eta))
    f = _monomial(j, n - 1 - j, 0, 0, params) * AnalyticFn(den, "1/theta(q^-1/4 Z)", poles=poles)
    return f if chi is None else f * chi


def check_zmneta(n: int, params: ModularParams, tol: float = 1e-8,
                 rng: np.random.Generator | None = None, count: int = 20) -> VerificationReport:
    """Single-lattice zero modes of M(n eta): gauge form and the periodic variant."""
    rng = rng or np.random.default_rng(0)
    op = m_normal_ordered(n, 0, False, params).op
    chi = q_elliptic_ratio(BASIS_H_A, BASIS_H_B, params)
    parts = []
    for j in range(n):
        for label, f in ((f"gauge(j={j})", zmneta_gauge(n, j, params)),
                         (f"gauge*psi(j={j})", zmneta_gauge(n, j, params, chi)),
                         (f"periodic(j={j})", zmneta_periodic(n, j, params)),
                         (f"periodic*chi(j={j})", zmneta_periodic(n, j, params, chi))):
            z = _points_for(op, f, params, rng, count)
            parts.append(VerificationReport(label, tol, list(zip(
                z.tolist(), annihilation_residual(op, f, z).tolist()))))
    return reports.merge("Eq-zmneta", parts, tol)


# -- h-type basis ------------------------------------------------------------------

def _h(N: int, k: int, a: complex, b: complex, w, nome: complex, step: complex):
    w = np.asarray(w, dtype=complex)
    out = np.ones(w.shape, dtype=complex)
    for j in range(k):
        out = out * mult_theta(step ** j * a * w, nome) * mult_theta(step ** j * a / w, nome)
    for j in range(N - k):
        out = out * mult_theta(step ** j * b * w, nome) * mult_theta(step ** j * b / w, nome)
    return out


def basis_h(N: int, k: int, w, params: ModularParams, a: complex = BASIS_H_A,
            b: complex = BASIS_H_B, two_index: tuple[int, int] | None = None):
    """h_k^{(N)}(w; p, q), or h_k^{(N)}(w; p, q) h_j^{(M)}(w; q, p) with two_index = (M, j)."""
    if not 0 <= k <= N:
        raise ParameterError(f"need 0 <= k <= N, got k={k}, N={N}")
    p, q = params.p, params.q
    out = _h(N, k, a, b, w, p, q)
    if two_index is not None:
        M, j = two_index
        if not 0 <= j <= M:
            raise ParameterError(f"need 0 <= j <= M, got j={j}, M={M}")
        out = out * _h(M, j, a, b, w, q, p)
    return out


def basis_h_fn(N: int, k: int, M: int, j: int, params: ModularParams) -> AnalyticFn:
    """h_{kj}^{(N,M)} as a function of z (w = e^{2 pi i z})."""
    return AnalyticFn(lambda z: basis_h(N, k, np.exp(TWO_PI_I * np.asarray(z, dtype=complex)),
                                        params, two_index=(M, j)), f"h[{N},{k};{M},{j}]")


def check_basis_h(n: int, m: int, params: ModularParams, tol: float = 1e-8,
                  rng: np.random.Generator | None = None) -> VerificationReport:
    """Every h_{kj}^{(n-1,m-1)} lies in span(phi) and is annihilated by M."""
    rng = rng or np.random.default_rng(0)
    op = m_normal_ordered(n, m, False, params).op
    parts = []
    for k in range(n):
        for j in range(m):
            h = basis_h_fn(n - 1, k, m - 1, j, params)
            _, res = decompose_in_basis(h, n, m, params, rng)
            parts.append(VerificationReport(f"span(k={k},j={j})", tol, [((k, j), res)]))
            z = _points_for(op, h, params, rng, 10)
            parts.append(VerificationReport(f"kernel(k={k},j={j})", tol, list(zip(
                z.tolist(), annihilation_residual(op, h, z).tolist()))))
    return reports.merge("Eq-dis-bas", parts, tol)
