"""Sklyanin algebra generators of the elliptic modular double.

``S^a(g)`` shift by +-eta with theta functions of modulus tau; the partner
generators ``St^a(g)`` are the same construction with (2 eta, tau) swapped,
so they shift by +-tau/2 with modulus 2 eta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import reports
from .operator_algebra import (
    AnalyticFn,
    DifferenceOperator,
    commutator,
    compose,
    gauge_conjugate,
    lincomb,
    weak_check,
)
from .reports import VerificationReport
from .special_functions import ModularParams, theta1, theta_a

CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


@dataclass(frozen=True)
class LatticeSpin:
    """Spin ``g``; optionally tagged as the lattice point ``n eta + m tau/2 (+ 1/2)``."""

    g: complex
    lattice: tuple[int, int, bool] | None = None

    @classmethod
    def at(cls, n: int, m: int, half: bool, params: ModularParams) -> "LatticeSpin":
        if n < 0 or m < 0:
            raise ValueError("lattice indices must be non-negative")
        g = n * params.eta + m * params.tau / 2 + (0.5 if half else 0.0)
        return cls(complex(g), (n, m, bool(half)))

    def check(self, params: ModularParams) -> None:
        if self.lattice is not None:
            n, m, half = self.lattice
            g = n * params.eta + m * params.tau / 2 + (0.5 if half else 0.0)
            if abs(g - self.g) > 1e-14:
                raise ValueError(f"spin {self.g} does not match lattice point {self.lattice}")

    def spin_ell(self, params: ModularParams) -> complex:
        """Conventional spin with ``g = eta (2 ell + 1)``."""
        return (self.g / params.eta - 1) / 2

    def __neg__(self) -> "LatticeSpin":
        return LatticeSpin(-self.g)


Spin = Union[LatticeSpin, complex, float]


def spin_value(g: Spin) -> complex:
    return g.g if isinstance(g, LatticeSpin) else complex(g)


@dataclass(frozen=True)
class StructureConstants:
    J1: complex
    J2: complex
    J3: complex
    Jt1: complex
    Jt2: complex
    Jt3: complex

    @staticmethod
    def pair(J: tuple[complex, complex, complex], alpha: int, beta: int) -> complex:
        """``J_{alpha beta} = (J_beta - J_alpha) / J_gamma``."""
        gamma = 6 - alpha - beta
        return (J[beta - 1] - J[alpha - 1]) / J[gamma - 1]

    @property
    def untilded(self) -> tuple[complex, complex, complex]:
        return (self.J1, self.J2, self.J3)

    @property
    def tilded(self) -> tuple[complex, complex, complex]:
        return (self.Jt1, self.Jt2, self.Jt3)


def _J(half_step: complex, modulus: complex) -> tuple[complex, ...]:
    out = []
    for a in (2, 3, 4):
        th = lambda z: theta_a(a, z, modulus)  # noqa: E731
        out.append(th(2 * half_step) * th(0) / th(half_step) ** 2)
    return tuple(out)


def structure_constants(params: ModularParams) -> StructureConstants:
    J = _J(params.eta, params.tau)
    Jt = _J(params.tau / 2, 2 * params.eta)
    return StructureConstants(*J, *Jt)


def constraint_residual(J: tuple[complex, complex, complex]) -> complex:
    """``J12 + J23 + J31 + J12 J23 J31`` (vanishes identically)."""
    j12 = StructureConstants.pair(J, 1, 2)
    j23 = StructureConstants.pair(J, 2, 3)
    j31 = StructureConstants.pair(J, 3, 1)
    return j12 + j23 + j31 + j12 * j23 * j31


def _generator(a: int, g: complex, half_step: complex, modulus: complex) -> DifferenceOperator:
    if a not in (0, 1, 2, 3):
        raise ValueError(f"generator index must be 0..3, got {a}")
    h, T = complex(half_step), complex(modulus)
    pref = (1j if a == 2 else 1) * theta_a(a + 1, h, T)
    const = AnalyticFn.const(pref)
    den = AnalyticFn.theta(1, T, 2.0)
    # e^{pi i z^2/h} [..] e^{-pi i z^2/h} turns the shift by +-h into e^{-+2 pi i z - pi i h}
    plus = const * AnalyticFn.exp_linear(-2j * np.pi, -1j * np.pi * h) \
        * AnalyticFn.theta(a + 1, T, 2.0, -g + h) / den
    minus = const * AnalyticFn.exp_linear(2j * np.pi, -1j * np.pi * h) \
        * AnalyticFn.theta(a + 1, T, -2.0, -g + h) / AnalyticFn.theta(1, T, -2.0)
    return DifferenceOperator(((h, plus), (-h, minus)), f"S{a}(g={g}; h={h}, T={T})")


def _generator_bracket(a: int, g: complex, half_step: complex, modulus: complex
                       ) -> DifferenceOperator:
    """Same generator assembled as a gauge-conjugated bracket."""
    h, T = complex(half_step), complex(modulus)
    pref = AnalyticFn.const((1j if a == 2 else 1) * theta_a(a + 1, h, T))
    den = AnalyticFn.theta(1, T, 2.0)
    inner = DifferenceOperator((
        (h, pref * AnalyticFn.theta(a + 1, T, 2.0, -g + h) / den),
        (-h, -1 * pref * AnalyticFn.theta(a + 1, T, -2.0, -g + h) / den),
    ))
    return gauge_conjugate(inner, 1j * np.pi / h)


def generator_S(a: int, g: Spin, params: ModularParams) -> DifferenceOperator:
    """``S^a(g) = f_a(z) e^{eta d} + f_a(-z) e^{-eta d}``."""
    return _generator(a, spin_value(g), params.eta, params.tau)


def generator_S_tilde(a: int, g: Spin, params: ModularParams) -> DifferenceOperator:
    """Partner generator: shifts +-tau/2, thetas of modulus 2 eta."""
    return _generator(a, spin_value(g), params.tau / 2, 2 * params.eta)


def generators(g: Spin, params: ModularParams, tilde: bool = False) -> list[DifferenceOperator]:
    build = generator_S_tilde if tilde else generator_S
    return [build(a, g, params) for a in range(4)]


def casimir_scalar(which: str, g: Spin, params: ModularParams) -> complex:
    g = spin_value(g)
    tau, eta = params.tau, params.eta
    if which == "K0":
        return 4 * theta1(g, tau) ** 2
    if which == "K2":
        return 4 * theta1(g - eta, tau) * theta1(g + eta, tau)
    if which == "Kt0":
        return 4 * theta1(g, 2 * eta) ** 2
    if which == "Kt2":
        return 4 * theta1(g - tau / 2, 2 * eta) * theta1(g + tau / 2, 2 * eta)
    raise ValueError(f"unknown Casimir {which!r}")


def casimir_summands(which: str, g: Spin, params: ModularParams) -> list[DifferenceOperator]:
    tilde = which.startswith("Kt")
    S = generators(g, params, tilde)
    sc = structure_constants(params)
    J = sc.tilded if tilde else sc.untilded
    if which.endswith("0"):
        return [compose(s, s) for s in S]
    return [lincomb([J[a - 1]], [compose(S[a], S[a])]) for a in (1, 2, 3)]


def casimir_operator(which: str, g: Spin, params: ModularParams) -> DifferenceOperator:
    parts = casimir_summands(which, g, params)
    return lincomb([1] * len(parts), parts)


def algebra_relations(S: list[DifferenceOperator], J: tuple[complex, complex, complex]):
    """Both families of defining relations as (label, lhs, rhs, summands) tuples."""
    out = []
    for al, be, ga in CYCLIC:
        lhs = commutator(S[al], S[be])
        rhs = lincomb([1j], [commutator(S[0], S[ga], +1)])
        parts = [compose(S[al], S[be]), compose(S[be], S[al]),
                 compose(S[0], S[ga]), compose(S[ga], S[0])]
        out.append((f"[S{al},S{be}]", lhs, rhs, parts))
        lhs = commutator(S[0], S[al])
        jbg = StructureConstants.pair(J, be, ga)
        rhs = lincomb([1j * jbg], [commutator(S[be], S[ga], +1)])
        parts = [compose(S[0], S[al]), compose(S[al], S[0]),
                 lincomb([jbg], [compose(S[be], S[ga])]), lincomb([jbg], [compose(S[ga], S[be])])]
        out.append((f"[S0,S{al}]", lhs, rhs, parts))
    return out


def check_algebra(g: Spin, params: ModularParams, tol: float = 1e-9, tilde: bool = False,
                  rng: np.random.Generator | None = None, J_override=None,
                  n_points: int = 20) -> VerificationReport:
    """Weakly verify the quadratic relations of one Sklyanin algebra of the double."""
    rng = rng or np.random.default_rng(0)
    sc = structure_constants(params)
    J = J_override or (sc.tilded if tilde else sc.untilded)
    S = generators(g, params, tilde)
    parts = [weak_check(label, lhs, rhs, params, tol, rng, n_points=n_points, parts=summands)
             for label, lhs, rhs, summands in algebra_relations(S, J)]
    ident = "Eq-sklalg_doub" if tilde else "Eq-sklalg"
    return reports.merge(ident, parts, tol)


def cross_sign(a: int, b: int) -> int:
    """+1 if S^a and St^b commute, -1 if they anticommute."""
    return 1 if ((a in (0, 3)) == (b in (0, 3))) else -1


def check_cross_relations(g: Spin, params: ModularParams, tol: float = 1e-9,
                          rng: np.random.Generator | None = None) -> VerificationReport:
    rng = rng or np.random.default_rng(0)
    S, St = generators(g, params), generators(g, params, tilde=True)
    parts = []
    for a in range(4):
        for b in range(4):
            sgn = cross_sign(a, b)
            lhs = compose(S[a], St[b])
            rhs = lincomb([sgn], [compose(St[b], S[a])])
            parts.append(weak_check(f"S{a}St{b}", lhs, rhs, params, tol, rng, n_probes=3,
                                    n_points=10))
    return reports.merge("cross-commutation", parts, tol)


def check_casimirs(g: Spin, params: ModularParams, tol: float = 1e-9,
                   rng: np.random.Generator | None = None) -> VerificationReport:
    """Each Casimir acts as its scalar, and the scalars are even in g."""
    rng = rng or np.random.default_rng(0)
    parts = []
    for which in ("K0", "K2", "Kt0", "Kt2"):
        summands = casimir_summands(which, g, params)
        K = lincomb([1] * len(summands), summands)
        scalar = casimir_scalar(which, g, params)
        parts.append(weak_check(which, K, lincomb([scalar], [DifferenceOperator.identity()]),
                                params, tol, rng, n_probes=3, n_points=10, parts=summands))
        refl = abs(casimir_scalar(which, -spin_value(g), params) - scalar) / abs(scalar)
        parts.append(VerificationReport(f"{which}(-g)=={which}(g)", tol, [(spin_value(g), refl)]))
    return reports.merge("casimirs", parts, tol)


# -- RLL relation ----------------------------------------------------------------

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def baxter_weights(u: complex, params: ModularParams) -> np.ndarray:
    """``w_a(u) = theta_{a+1}(u + eta|tau) / theta_{a+1}(eta|tau)``."""
    return np.array([theta_a(a + 1, u + params.eta, params.tau) / theta_a(a + 1, params.eta, params.tau)
                     for a in range(4)])


def baxter_r(u: complex, params: ModularParams, weights=None) -> np.ndarray:
    w = baxter_weights(u, params) if weights is None else weights
    return sum(w[a] * np.kron(PAULI[a], PAULI[a]) for a in range(4))


OpMatrix = list[list[DifferenceOperator]]


def l_operator(u: complex, g: Spin, params: ModularParams) -> OpMatrix:
    """2x2 matrix ``sum_a w_a(u) sigma_a (x) S^a``."""
    w = baxter_weights(u, params)
    S = generators(g, params)
    return [[lincomb([w[a] * PAULI[a][i, j] for a in range(4)], S) for j in range(2)]
            for i in range(2)]


def _embed(L: OpMatrix, slot: int) -> OpMatrix:
    """Lift a 2x2 operator matrix to the 4x4 auxiliary space, acting on ``slot``."""
    zero = DifferenceOperator.zero()
    out = [[zero] * 4 for _ in range(4)]
    for i1 in range(2):
        for i2 in range(2):
            for j1 in range(2):
                for j2 in range(2):
                    if slot == 1 and i2 == j2:
                        out[2 * i1 + i2][2 * j1 + j2] = L[i1][j1]
                    elif slot == 2 and i1 == j1:
                        out[2 * i1 + i2][2 * j1 + j2] = L[i2][j2]
    return out


def _opmat_mul(A: OpMatrix, B: OpMatrix) -> OpMatrix:
    n = len(A)
    return [[lincomb([1] * n, [compose(A[i][k], B[k][j]) for k in range(n)]) for j in range(n)]
            for i in range(n)]


def _scalar_mul(R: np.ndarray, A: OpMatrix, left: bool) -> OpMatrix:
    n = len(A)
    if left:
        return [[lincomb([R[i, k] for k in range(n)], [A[k][j] for k in range(n)])
                 for j in range(n)] for i in range(n)]
    return [[lincomb([R[k, j] for k in range(n)], [A[i][k] for k in range(n)])
             for j in range(n)] for i in range(n)]


def check_rll(u: complex, v: complex, g: Spin, params: ModularParams, tol: float = 1e-8,
              rng: np.random.Generator | None = None, weights=None,
              n_points: int = 10) -> VerificationReport:
    """Weakly verify all 16 entries of ``R12(u-v) L1(u) L2(v) = L2(v) L1(u) R12(u-v)``."""
    rng = rng or np.random.default_rng(0)
    R = baxter_r(u - v, params, weights)
    L1 = _embed(l_operator(u, g, params), 1)
    L2 = _embed(l_operator(v, g, params), 2)
    lhs = _scalar_mul(R, _opmat_mul(L1, L2), left=True)
    rhs = _scalar_mul(R, _opmat_mul(L2, L1), left=False)
    parts = [weak_check(f"RLL[{i},{j}]", lhs[i][j], rhs[i][j], params, tol, rng, n_probes=2,
                        n_points=n_points)
             for i in range(4) for j in range(4)]
    return reports.merge("RLL", parts, tol)
