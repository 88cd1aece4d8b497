"""Finite-difference operators as sums of (coefficient function) x (shift).

A :class:`DifferenceOperator` is a tuple of terms ``(shift, coeff)`` acting
as ``(op f)(z) = sum coeff(z) f(z + shift)``.  Coefficients are
:class:`AnalyticFn` values that carry their pole lattices, so sample points
can be chosen away from every singularity exactly rather than by trial.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .reports import REJECTED, VerificationReport
from .special_functions import ModularParams, theta_a

log = logging.getLogger(__name__)

SHIFT_MERGE_TOL = 1e-12
ABS_FLOOR = 1e-300
DEFAULT_SEED = 0xE11EC

# zeros of theta_a(w|tau) sit at c_a + Z + tau Z
_THETA_ZERO = {1: lambda t: 0.0, 2: lambda t: 0.5, 3: lambda t: 0.5 + t / 2, 4: lambda t: t / 2}


@dataclass(frozen=True)
class Lattice:
    """The point set ``centre + Z*w1 + Z*w2``."""

    centre: complex
    w1: complex
    w2: complex

    def shifted(self, s: complex) -> "Lattice":
        return Lattice(self.centre + s, self.w1, self.w2)

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex) - self.centre
        basis = np.array([[self.w1.real, self.w2.real], [self.w1.imag, self.w2.imag]])
        coords = np.linalg.solve(basis, np.stack([z.real, z.imag]).reshape(2, -1))
        base = np.floor(coords)
        best = np.full(coords.shape[1], np.inf)
        for i in (-1, 0, 1, 2):
            for j in (-1, 0, 1, 2):
                node = (base[0] + i) * self.w1 + (base[1] + j) * self.w2
                best = np.minimum(best, np.abs(z.reshape(-1) - node))
        return best.reshape(np.shape(z))


def theta_zeros(a: int, tau: complex, scale: complex = 1.0, offset: complex = 0.0) -> Lattice:
    """Zero set of ``z -> theta_a(scale*z + offset | tau)``."""
    c = _THETA_ZERO[a](tau)
    return Lattice((c - offset) / scale, 1 / scale, tau / scale)


@dataclass(frozen=True)
class AnalyticFn:
    """An evaluable function of one complex variable with declared poles/zeros.

    ``fn`` must accept numpy arrays.  ``zeros`` is optional and only used
    when the function appears in a denominator.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "f"
    poles: tuple[Lattice, ...] = ()
    zeros: tuple[Lattice, ...] | None = ()

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    @staticmethod
    def const(c: complex, descriptor: str | None = None) -> "AnalyticFn":
        c = complex(c)
        return AnalyticFn(lambda z: np.full(np.shape(z), c), descriptor or repr(c),
                          zeros=() if c != 0 else None)

    @staticmethod
    def exp_linear(a: complex, b: complex = 0.0, descriptor: str | None = None) -> "AnalyticFn":
        """``z -> exp(a*z + b)``."""
        a, b = complex(a), complex(b)
        return AnalyticFn(lambda z: np.exp(a * z + b), descriptor or f"exp({a}*z+{b})")

    @staticmethod
    def theta(a: int, tau: complex, scale: complex = 1.0, offset: complex = 0.0,
              descriptor: str | None = None) -> "AnalyticFn":
        """``z -> theta_a(scale*z + offset | tau)``."""
        tau, scale, offset = complex(tau), complex(scale), complex(offset)
        return AnalyticFn(
            lambda z: theta_a(a, scale * z + offset, tau),
            descriptor or f"theta{a}({scale}*z+{offset}|{tau})",
            zeros=(theta_zeros(a, tau, scale, offset),),
        )

    def shifted(self, s: complex) -> "AnalyticFn":
        """``z -> f(z + s)``."""
        s = complex(s)
        if s == 0:
            return self
        fn = self.fn
        return AnalyticFn(
            lambda z: fn(z + s),
            f"{self.descriptor}[z+{s}]",
            tuple(p.shifted(-s) for p in self.poles),
            None if self.zeros is None else tuple(p.shifted(-s) for p in self.zeros),
        )

    def __mul__(self, other):
        if not isinstance(other, AnalyticFn):
            c = complex(other)
            fn = self.fn
            return AnalyticFn(lambda z: c * fn(z), f"{c}*{self.descriptor}", self.poles,
                              self.zeros if c != 0 else None)
        f, g = self.fn, other.fn
        zeros = None
        if self.zeros is not None and other.zeros is not None:
            zeros = self.zeros + other.zeros
        return AnalyticFn(lambda z: f(z) * g(z), f"({self.descriptor})*({other.descriptor})",
                          self.poles + other.poles, zeros)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, AnalyticFn):
            other = AnalyticFn.const(other)
        f, g = self.fn, other.fn
        return AnalyticFn(lambda z: f(z) + g(z), f"({self.descriptor})+({other.descriptor})",
                          self.poles + other.poles, None)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def reciprocal(self) -> "AnalyticFn":
        if self.zeros is None:
            raise ValueError(f"cannot invert {self.descriptor}: zero set not declared")
        fn = self.fn
        return AnalyticFn(lambda z: 1 / fn(z), f"1/({self.descriptor})", self.zeros, self.poles)

    def __truediv__(self, other):
        if not isinstance(other, AnalyticFn):
            return self * (1 / complex(other))
        return self * other.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        fn = self.fn
        zeros = None if self.zeros is None else self.zeros if k else ()
        return AnalyticFn(lambda z: fn(z) ** k, f"({self.descriptor})^{k}",
                          self.poles if k else (), zeros)


ONE = AnalyticFn.const(1.0, "1")


@dataclass(frozen=True)
class DifferenceOperator:
    """Finite sum ``sum_i coeff_i(z) e^{shift_i d/dz}``; like shifts are merged."""

    terms: tuple[tuple[complex, AnalyticFn], ...] = ()
    descriptor: str = "op"

    def __post_init__(self):
        merged: list[list] = []
        for s, c in self.terms:
            s = complex(s)
            for entry in merged:
                if abs(entry[0] - s) <= SHIFT_MERGE_TOL:
                    entry[1] = entry[1] + c
                    break
            else:
                merged.append([s, c])
        object.__setattr__(self, "terms", tuple((s, c) for s, c in merged))

    @staticmethod
    def identity() -> "DifferenceOperator":
        return DifferenceOperator(((0j, ONE),), "1")

    @staticmethod
    def zero() -> "DifferenceOperator":
        return DifferenceOperator((), "0")

    @staticmethod
    def shift(s: complex, coeff: AnalyticFn = ONE) -> "DifferenceOperator":
        return DifferenceOperator(((complex(s), coeff),), f"e^({s} d)")

    @staticmethod
    def multiplication(fn: AnalyticFn) -> "DifferenceOperator":
        return DifferenceOperator(((0j, fn),), fn.descriptor)

    @property
    def shifts(self) -> list[complex]:
        return [s for s, _ in self.terms]

    def coefficient(self, shift: complex) -> AnalyticFn | None:
        for s, c in self.terms:
            if abs(s - shift) <= SHIFT_MERGE_TOL:
                return c
        return None

    def poles(self) -> tuple[Lattice, ...]:
        out: tuple[Lattice, ...] = ()
        for _, c in self.terms:
            out += c.poles
        return _unique(out)

    def __matmul__(self, other: "DifferenceOperator") -> "DifferenceOperator":
        return compose(self, other)

    def __add__(self, other):
        return lincomb([1, 1], [self, other])

    def __sub__(self, other):
        return lincomb([1, -1], [self, other])

    def __mul__(self, c):
        return lincomb([c], [self])

    __rmul__ = __mul__

    def __call__(self, f: AnalyticFn) -> AnalyticFn:
        return apply(self, f)

    def to_json(self) -> list[dict]:
        return [{"shift": [format(s.real, ".17g"), format(s.imag, ".17g")],
                 "coeff_descriptor": c.descriptor} for s, c in self.terms]


def _unique(lattices: Iterable[Lattice]) -> tuple[Lattice, ...]:
    out: list[Lattice] = []
    for lat in lattices:
        if not any(abs(lat.centre - o.centre) < 1e-13 and lat.w1 == o.w1 and lat.w2 == o.w2
                   for o in out):
            out.append(lat)
    return tuple(out)


def apply(op: DifferenceOperator, f: AnalyticFn) -> AnalyticFn:
    """``(op f)(z) = sum coeff(z) f(z + shift)``."""
    terms = op.terms

    def fn(z):
        out = np.zeros(np.shape(z), dtype=complex)
        for s, c in terms:
            out = out + c.fn(z) * f.fn(z + s)
        return out

    poles = op.poles() + tuple(p.shifted(-s) for s, _ in terms for p in f.poles)
    return AnalyticFn(fn, f"[{op.descriptor}]({f.descriptor})", _unique(poles), None)


def term_values(op: DifferenceOperator, f: AnalyticFn, z) -> np.ndarray:
    """Individual terms ``coeff_i(z) f(z + shift_i)``, stacked on axis 0."""
    z = np.asarray(z, dtype=complex)
    if not op.terms:
        return np.zeros((1,) + z.shape, dtype=complex)
    return np.stack([c.fn(z) * f.fn(z + s) for s, c in op.terms])


def compose(a: DifferenceOperator, b: DifferenceOperator) -> DifferenceOperator:
    """Operator product ``a b``: (c1, s1)(c2, s2) = (c1 * c2(. + s1), s1 + s2)."""
    terms = [(s1 + s2, c1 * c2.shifted(s1)) for s1, c1 in a.terms for s2, c2 in b.terms]
    return DifferenceOperator(tuple(terms), f"{a.descriptor} . {b.descriptor}")


def lincomb(coeffs: Sequence[complex], ops: Sequence[DifferenceOperator]) -> DifferenceOperator:
    if len(coeffs) != len(ops):
        raise ValueError("coeffs and ops must have equal length")
    # scalar multiples of one coefficient object combine exactly, so A - A is the zero operator
    weights: dict[tuple[complex, int], list] = {}
    for c, op in zip(coeffs, ops):
        c = complex(c)
        for s, coeff in op.terms:
            entry = weights.setdefault((s, id(coeff)), [s, coeff, 0j])
            entry[2] += c
    terms = [(s, coeff if w == 1 else coeff * w) for s, coeff, w in weights.values() if w != 0]
    desc = " + ".join(f"{complex(c)}*{op.descriptor}" for c, op in zip(coeffs, ops))
    return DifferenceOperator(tuple(terms), desc)


def commutator(a: DifferenceOperator, b: DifferenceOperator, sign: int = -1) -> DifferenceOperator:
    """``ab - ba`` (or ``ab + ba`` with ``sign=+1``)."""
    return lincomb([1, sign], [compose(a, b), compose(b, a)])


def gauge_conjugate(op: DifferenceOperator, alpha: complex) -> DifferenceOperator:
    """``e^{alpha z^2} op e^{-alpha z^2}`` expanded into closed coefficients."""
    alpha = complex(alpha)
    if alpha == 0:
        return op
    terms = []
    for s, c in op.terms:
        factor = AnalyticFn.exp_linear(-2 * alpha * s, -alpha * s * s)
        terms.append((s, c * factor))
    return DifferenceOperator(tuple(terms), f"gauge({alpha})[{op.descriptor}]")


def gauge_function(alpha: complex) -> AnalyticFn:
    """The entire function ``z -> e^{alpha z^2}``."""
    alpha = complex(alpha)
    return AnalyticFn(lambda z: np.exp(alpha * z * z), f"exp({alpha}*z^2)")


# -- sampling and weak equality ------------------------------------------------

SAMPLE_RE = (0.05, 0.95)
SAMPLE_IM = (-0.1, 0.1)
POLE_MARGIN = 1e-3


def base_poles(params: ModularParams) -> tuple[Lattice, ...]:
    """Zeros of theta1(2z|tau) and theta1(2z|2 eta): the poles of every generator."""
    return (theta_zeros(1, params.tau, 2.0), theta_zeros(1, 2 * params.eta, 2.0))


def sample_points(rng: np.random.Generator, count: int, avoid: Sequence[Lattice] = (),
                  margin: float = POLE_MARGIN, re=SAMPLE_RE, im=SAMPLE_IM,
                  max_draws: int = 100000) -> np.ndarray:
    """Uniform points in the sampling rectangle at distance >= margin from ``avoid``."""
    out: list[complex] = []
    draws = 0
    while len(out) < count:
        batch = rng.uniform(re[0], re[1], 4 * count) + 1j * rng.uniform(im[0], im[1], 4 * count)
        draws += batch.size
        ok = np.ones(batch.size, dtype=bool)
        for lat in avoid:
            ok &= lat.distance(batch) >= margin
        out.extend(batch[ok][: count - len(out)])
        if draws > max_draws:
            raise RuntimeError("could not draw enough pole-free sample points")
    return np.array(out, dtype=complex)


def operator_avoid_set(ops: Sequence[DifferenceOperator], probes: Sequence[AnalyticFn] = ()
                       ) -> tuple[Lattice, ...]:
    lats: list[Lattice] = []
    for op in ops:
        lats.extend(op.poles())
        for f in probes:
            for s, _ in op.terms:
                lats.extend(p.shifted(-s) for p in f.poles)
    return _unique(lats)


def trig_probe(rng: np.random.Generator, degree: int = 3) -> AnalyticFn:
    """Random trigonometric polynomial ``sum_{|k|<=degree} c_k e^{2 pi i k z}``."""
    c = rng.normal(size=2 * degree + 1) + 1j * rng.normal(size=2 * degree + 1)
    k = np.arange(-degree, degree + 1)

    def fn(z):
        return np.exp(2j * np.pi * np.multiply.outer(z, k)) @ c

    return AnalyticFn(fn, f"trig{degree}[{c[0]:.3g},...]")


def probe_battery(rng: np.random.Generator, count: int = 5, degree: int = 3) -> list[AnalyticFn]:
    return [trig_probe(rng, degree) for _ in range(count)]


def equal_at(a: DifferenceOperator, b: DifferenceOperator, probes: Sequence[AnalyticFn],
             points, tol: float, identity_id: str = "weak-equality",
             parts: Sequence[DifferenceOperator] = ()) -> VerificationReport:
    """Weak operator equality through probes at points.

    Residual per (probe, point) is ``|(a-b)f| / max(|af|, |bf|, 1e-300)``.
    When ``a`` or ``b`` is a sum whose summands nearly cancel, pass the
    summands as ``parts``: their magnitudes ``|part f|`` then join the
    denominator, so the residual measures error relative to what double
    precision can resolve.
    """
    points = np.asarray(points, dtype=complex)
    samples = []
    floor_hits = 0
    for f in probes:
        af = apply(a, f)(points)
        bf = apply(b, f)(points)
        scale = np.maximum(np.maximum(np.abs(af), np.abs(bf)), ABS_FLOOR)
        for part in parts:
            scale = np.maximum(scale, np.abs(apply(part, f)(points)))
        floor_hits += int(np.all(scale <= ABS_FLOOR))
        res = np.abs(af - bf) / scale
        res = np.where(np.isfinite(res), res, np.inf)
        samples.extend(zip(points.tolist(), res.tolist()))
    report = VerificationReport(identity_id, tol, samples)
    if probes and floor_hits == len(probes):
        log.warning("%s: every probe evaluated below the absolute floor", identity_id)
        report.notes["degenerate_probes"] = True
    return report


def annihilation_residual(op: DifferenceOperator, f: AnalyticFn, points) -> np.ndarray:
    """``|op f| / max_i |term_i|``: relative size of a sum that should vanish."""
    t = term_values(op, f, points)
    scale = np.maximum(np.max(np.abs(t), axis=0), ABS_FLOOR)
    return np.abs(t.sum(axis=0)) / scale


def rejected(identity_id: str, tol: float, reason: str) -> VerificationReport:
    r = VerificationReport(identity_id, tol, [], REJECTED)
    r.notes["reason"] = reason
    return r


def weak_check(identity_id: str, a: DifferenceOperator, b: DifferenceOperator,
               params: ModularParams, tol: float, rng: np.random.Generator,
               n_probes: int = 5, n_points: int = 20,
               extra_avoid: Sequence[Lattice] = (),
               parts: Sequence[DifferenceOperator] = ()) -> VerificationReport:
    """Draw probes and pole-free points, then run :func:`equal_at`."""
    probes = probe_battery(rng, n_probes)
    avoid = base_poles(params) + operator_avoid_set([a, b], probes) + tuple(extra_avoid)
    pts = sample_points(rng, n_points, avoid)
    return equal_at(a, b, probes, pts, tol, identity_id, parts)


__all__ = [
    "Lattice", "theta_zeros", "AnalyticFn", "ONE", "DifferenceOperator", "apply", "compose",
    "lincomb", "commutator", "gauge_conjugate", "gauge_function", "term_values", "base_poles",
    "sample_points", "operator_avoid_set", "trig_probe", "probe_battery", "equal_at",
    "annihilation_residual", "weak_check", "rejected", "DEFAULT_SEED", "POLE_MARGIN",
]
