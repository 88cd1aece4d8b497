"""Acceptance criteria 1-8 at default parameters and the default seed.

Each test records one line ``ACCEPTANCE <k> PASS|FAIL <summary>``; the lines
are printed together in the pytest terminal summary.
"""

from __future__ import annotations

import io
import sys
import time

import numpy as np
import pytest

from elliptic_double import cli
from elliptic_double import intertwiner as itw
from elliptic_double.special_functions import default_params

CONFIG = cli.Config()


def _report(record, k: int, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    ok = ok and elapsed < limit
    record(f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'} {detail}; {elapsed:.1f}s (limit {limit:.0f}s)")
    return ok


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _worst(reps, ids=None):
    sel = [r for r in reps if ids is None or r.identity_id in ids]
    return max((r.max_residual for r in sel), default=0.0), sel


def test_1_special_functions(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("special-fns", CONFIG))
    worst, _ = _worst(reps)
    ids = {r.identity_id for r in reps}
    ok = ids >= {"Eq-theta1", "Eq-mper", "Eq-theta", "Eq-33", "Eq-eqgamma"} and worst <= 1e-10
    assert _report(acceptance_line, 1, ok, f"special functions max residual {worst:.2e} <= 1e-10", dt, 5)


def test_2_algebra(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("algebra", CONFIG) + cli.collect("double", CONFIG))
    worst, _ = _worst(reps, {"Eq-sklalg", "Eq-sklalg_doub", "cross-commutation", "casimirs"})
    con, _ = _worst(reps, {"Eq-con"})
    counts = {i: sum(r.identity_id == i for r in reps)
              for i in ("Eq-sklalg", "Eq-sklalg_doub", "cross-commutation", "casimirs")}
    ok = all(c == 5 for c in counts.values()) and worst <= 1e-9 and con <= 1e-12
    assert _report(acceptance_line, 2, ok, f"algebra weak residual {worst:.2e} <= 1e-9, constraint {con:.1e}", dt, 30)


def test_3_rll(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("rll", CONFIG))
    worst, _ = _worst(reps)
    entries = sum(len(r.notes["parts"]) for r in reps)
    ok = len(reps) == 3 and entries == 48 and worst <= 1e-8
    assert _report(acceptance_line, 3, ok, f"RLL 3 x 16 entries, max residual {worst:.2e} <= 1e-8", dt, 30)


def test_4_intertwiner_forms(acceptance_line):
    params = default_params()

    def run():
        out = []
        for n in range(4):
            for m in range(4):
                if n + m == 0:
                    continue
                for half in (False, True):
                    rng = np.random.default_rng([CONFIG.seed, n, m, half])
                    out.append(itw.check_forms(n, m, half, params, 1e-8, rng))
        return out

    reps, dt = _timed(run)
    worst, _ = _worst(reps)
    ok = len(reps) == 30 and worst <= 1e-8
    assert _report(acceptance_line, 4, ok, f"recursive(3)=recursive(4)=closed=normal on 30 lattices, "
                          f"max residual {worst:.2e} <= 1e-8", dt, 60)


def test_5_contiguous(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("contiguous", CONFIG))
    worst, sel = _worst(reps, {"Eq-recrelA", "Eq-id2", "Eq-dualeqn"})
    quad = next(r for r in reps if r.identity_id == "quadrature")
    delta = quad.max_residual
    rr = [r for r in sel if r.identity_id == "Eq-recrelA"]
    has_rr2 = all(any(k.startswith("RR2") for k in r.notes["parts"]) for r in rr)
    ok = len(rr) == 2 and has_rr2 and worst <= 1e-7 and delta <= 1e-9 and quad.notes["decaying"]
    assert _report(acceptance_line, 5, ok, f"contiguous/id2/dualeqn max residual {worst:.2e} <= 1e-7, "
                          f"|I512-I256| = {delta:.1e} <= 1e-9", dt, 60)


def test_6_zero_modes(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("zero-modes", CONFIG))
    ann, ann_sel = _worst(reps, {"Eq-Mphi"})
    inv, inv_sel = _worst(reps, {"Da-invariance"})
    single = next(r for r in reps if r.identity_id == "Da-single-lattice")
    st = dict(single.samples)["St"]
    ok = (len(ann_sel) == 36 and ann <= 1e-8 and len(inv_sel) == 32 and inv <= 1e-7
          and st >= 1e-2 and single.notes["reproduced"])
    assert _report(acceptance_line, 6, ok, f"annihilation {ann:.1e} <= 1e-8 (36 cases), invariance {inv:.1e} "
                          f"<= 1e-7 (32 cases), single-lattice St residual {st:.2f} >= 1e-2", dt, 120)


def test_7_dual_lattice(acceptance_line):
    reps, dt = _timed(lambda: cli.collect("dual", CONFIG) + cli.collect("inversion", CONFIG))
    image, img_sel = _worst(reps, {"Eq-Mdual-image"})
    zero1, z_sel = _worst(reps, {"Eq-zero1"})
    inv, _ = _worst(reps, {"Eq-inv_eta"})
    rev = next(r for r in reps if r.identity_id == "Eq-inv-reversed")
    ok = (len(img_sel) == 8 and image <= 1e-7 and len(z_sel) == 8 and zero1 <= 1e-6
          and inv <= 1e-7 and rev.status == "not_applicable" and rev.notes["reproduced"])
    assert _report(acceptance_line, 7, ok, f"dual image {image:.1e} <= 1e-7, zero1 {zero1:.1e} <= 1e-6, "
                          f"inversions {inv:.1e} <= 1e-7, reversed product non-identity "
                          f"(residual {float(rev.notes['zero_mode_residual']):.2f})", dt, 120)


def test_8_determinism(acceptance_line):
    def run():
        a, b = io.StringIO(), io.StringIO()
        ca = cli.run_suite("all", CONFIG, a)
        cb = cli.run_suite("all", CONFIG, b)
        return ca, cb, a.getvalue().encode(), b.getvalue().encode()

    (ca, cb, a, b), dt = _timed(run)
    ok = ca == cb == 0 and a == b and len(a) > 0
    lines = a.count(b"\n")
    assert _report(acceptance_line, 8, ok, f"two run_suite(all) streams byte-identical ({len(a)} bytes, "
                          f"{lines} reports), exit {ca}", dt, 600)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
