import io
import json

import numpy as np
import pytest

from elliptic_double import cli
from elliptic_double.intertwiner import m_closed, m_normal_ordered
from elliptic_double.special_functions import default_params


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, [json.loads(line) for line in out.out.splitlines() if line], out.err


def test_special_suite_reports(capsys):
    code, reps, _ = _run(["run", "special-fns"], capsys)
    assert code == 0
    assert [r["identity_id"] for r in reps][:3] == ["Eq-theta1", "Eq-mper", "Eq-theta"]
    echo = reps[0]["params_echo"]
    assert set(echo) == {"tau", "eta", "seed", "tol", "quad_nodes"}
    assert echo["seed"] == 0xE11EC and echo["quad_nodes"] == 512
    assert isinstance(reps[0]["max_residual"], str)
    assert float(reps[0]["max_residual"]) == max(float(s["residual"]) for s in reps[0]["samples"])


def test_negative_tau_is_config_error(capsys):
    code, reps, err = _run(["run", "special-fns", "--tau", "0.1,-0.3"], capsys)
    assert code == 2 and not reps
    assert "Im(tau) must be > 0" in err


@pytest.mark.parametrize("argv", [["run", "rll", "--quad-nodes", "100"],
                                  ["run", "rll", "--eta", "bogus"],
                                  ["run", "rll", "--tol", "x"]])
def test_other_config_errors(argv, capsys):
    assert cli.main(argv) == 2


def test_flags_win_over_environment(monkeypatch):
    monkeypatch.setenv("ELLIPTIC_DOUBLE_TAU", "0.1,-0.3")
    monkeypatch.setenv("ELLIPTIC_DOUBLE_SEED", "7")
    ns = cli.make_parser().parse_args(["run", "rll", "--tau", "0.12,0.4"])
    cfg = cli.build_config(ns)
    assert cfg.tau == 0.12 + 0.4j and cfg.seed == 7
    ns = cli.make_parser().parse_args(["run", "rll"])
    with pytest.raises(cli.ConfigError):
        cli.build_config(ns)


def test_internal_error_exit_code(monkeypatch):
    def boom(ctx):
        raise ArithmeticError("synthetic")
        yield
    monkeypatch.setitem(cli.SUITES, "rll", boom)
    assert cli.run_suite("rll", cli.Config(), io.StringIO()) == 3


def test_failure_exit_code():
    out = io.StringIO()
    assert cli.run_suite("special-fns", cli.Config(tol=1e-300), out) == 1
    assert '"status": "fail"' in out.getvalue()


def test_zero_modes_counts(capsys):
    code, reps, _ = _run(["check", "zero-modes", "--n", "2", "--m", "2"], capsys)
    assert code == 0
    ids = [r["identity_id"] for r in reps]
    assert ids.count("Eq-Mphi") == 4
    assert ids.count("Da-invariance") == 32


def test_zero_products_target(capsys):
    code, reps, _ = _run(["check", "zero-products", "--n", "1", "--m", "1", "--quad-nodes", "256"],
                         capsys)
    assert code == 0 and [r["identity_id"] for r in reps] == ["Eq-zero1", "Eq-zero1"]
    assert all(r["params_echo"]["quad_nodes"] == 256 for r in reps)


def test_dump_closed_single(capsys):
    code, _, _ = _run(["build-m", "--n", "1", "--m", "0", "--form", "closed"], capsys)
    assert code == 0
    doc = cli.dump_operator(1, 0, False, "closed")
    shifts = sorted(complex(float(t["shift"][0]), float(t["shift"][1])).imag for t in doc["terms"])
    eta = default_params().eta
    assert len(doc["terms"]) == 2 and shifts == pytest.approx([-eta.imag, eta.imag])


def test_dump_normal_term_count():
    assert len(cli.dump_operator(2, 2, False, "normal")["terms"]) == 9


@pytest.mark.parametrize("form,build", [("normal", lambda p: m_normal_ordered(2, 1, True, p)),
                                        ("closed", lambda p: m_closed(3, 0, False, p))])
def test_dump_round_trip(form, build):
    params = default_params()
    live = build(params)
    n, m, half = live.lattice
    doc = json.loads(json.dumps(cli.dump_operator(n, m, half, form)))
    z = np.array([complex(float(a), float(b)) for a, b in doc["points"]])
    assert len(z) == 10
    for term, (s, c) in zip(doc["terms"], live.op.terms):
        assert complex(float(term["shift"][0]), float(term["shift"][1])) == s
        vals = np.array([complex(float(a), float(b)) for a, b in term["values"]])
        assert np.allclose(vals, c(z), rtol=1e-15, atol=0)


def test_json_output_file(tmp_path):
    path = tmp_path / "out.ndjson"
    assert cli.main(["run", "rll", "--json", str(path)]) == 0
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3 and all(json.loads(x)["identity_id"] == "RLL" for x in lines)


def test_threads_do_not_change_output(monkeypatch):
    monkeypatch.setattr(cli, "ALL", ["special-fns", "algebra", "rll"])
    serial = [r.to_json() for r in cli.collect("all", cli.Config(jobs=1))]
    threaded = [r.to_json() for r in cli.collect("all", cli.Config(jobs=3))]
    assert serial == threaded
