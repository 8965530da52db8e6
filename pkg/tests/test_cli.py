import csv
import io
import json
import subprocess
import sys

import pytest

from aciq.cli import CONFIG_SCHEMA, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, resolve_threads, run
from aciq.errors import ConfigError


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run_cli(argv, capsys):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_default_example(capsys):
    code, out, _ = run_cli(["verify"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["passed"]
    assert abs(rep["omega_at_unit"][0] - 38.48451000647496) < 1e-6
    assert abs(rep["flux"][0] - 6.283185307179586) < 1e-6
    assert abs(rep["K"][0] - 2.0) < 1e-6
    assert rep["K_printed_formula_discrepancy"] is True
    names = {c["check"] for c in rep["checks"]}
    assert {"weight_symmetry", "gauge_condition_fd", "resolution_of_identity",
            "pullback_identities", "covariance_dilation"} <= names


def test_output_is_byte_identical_across_runs(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["gauge", "--out", str(a)]) == EXIT_OK
    assert run(["gauge", "--out", str(b), "--threads", "3"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    run(["moments", "--format", "csv", "--out", str(c)])
    run(["moments", "--format", "csv", "--out", str(d)])
    assert c.read_bytes() == d.read_bytes()


def test_spectrum_csv_columns(capsys):
    code, out, _ = run_cli(["spectrum", "--m", "1", "--mu", "0.5", "--K", "2", "--n", "4000"],
                           capsys)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["m", "mu", "K", "level", "eigenvalue", "oracle_value", "rel_err"]
    assert len(rows) == 4
    assert all(float(r[-1]) < 0.005 for r in rows[1:])


def test_spectrum_failure_exit_code(capsys):
    # far too coarse a grid to meet a 1e-9 tolerance
    code, _, err = run_cli(["spectrum", "--n", "64", "--tol", "1e-9"], capsys)
    assert code == EXIT_CHECK_FAILED
    assert json.loads(err.splitlines()[-1])["error"] == "CheckFailed"


def test_localize_argmax_row(capsys):
    code, out, _ = run_cli(["localize", "--nu", "64", "--sigma", "3.5", "--format", "json"],
                           capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["argmax"] == pytest.approx([1.0, 0.0, 0.0, 0.0], abs=1e-12)
    code, out, _ = run_cli(["localize", "--nu", "64"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["q1", "q2", "p1", "p2", "abs_w_normalized"]
    best = max(rows[1:], key=lambda r: float(r[4]))
    assert [float(v) for v in best[:4]] == pytest.approx([1.0, 0.0, 0.0, 0.0], abs=1e-12)


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {"weight": {"family": "example", "nu": 1, "sigma": 3.5},
                                  "bogus": 1})
    code, out, err = run_cli(["gauge", "--config", cfg], capsys)
    assert code == EXIT_ERROR
    assert out == ""
    diag = json.loads(err)
    assert diag["error"] == "ConfigError" and "bogus" in diag["message"]


def test_config_command_mismatch_and_unreadable_file(tmp_path, capsys):
    cfg = write_config(tmp_path, {"command": "verify"})
    assert run_cli(["gauge", "--config", cfg], capsys)[0] == EXIT_ERROR
    assert run_cli(["gauge", "--config", str(tmp_path / "missing.json")], capsys)[0] == EXIT_ERROR


def test_coherent_reports_both_flux_routes(tmp_path, capsys):
    cfg = write_config(tmp_path, {"state": {"g": {"kind": "gaussian_ring", "center": 1.0,
                                                  "width": 0.1}, "mu": 1}})
    code, out, _ = run_cli(["coherent", "--config", cfg], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["flux_routes_disagree"] is True
    assert rep["K_phase_state_formula_discrepancy"] is True


def test_gauge_violation_exit_code(monkeypatch, capsys):
    # no configurable weight violates the gauge condition, so inject the failure
    import aciq.cli as cli
    from aciq.errors import GaugeConditionError

    def broken(cfg, args):
        raise GaugeConditionError(0.5, 1e-6)

    monkeypatch.setitem(cli.HANDLERS, "gauge", broken)
    code, out, err = run_cli(["gauge"], capsys)
    assert code == EXIT_CHECK_FAILED
    diag = json.loads(err)
    assert diag["check"] == "gauge_condition" and diag["residual"] == 0.5


def test_invalid_state_is_a_configuration_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"state": {"g": {"kind": "gaussian_ring", "center": 0.5,
                                                  "width": 0.1}}})
    code, _, err = run_cli(["coherent", "--config", cfg], capsys)
    assert code == EXIT_ERROR
    assert json.loads(err)["error"] == "DomainError"


def test_quantize_reports_requested_observables(tmp_path, capsys):
    cfg = write_config(tmp_path, {"observables": ["kinetic"], "betas": [-2.0]})
    code, out, _ = run_cli(["quantize", "--config", cfg], capsys)
    assert code == EXIT_OK
    ops = json.loads(out)["operators"]
    assert set(ops) == {"kinetic", "q^-2.0"}
    cfg = write_config(tmp_path, {"observables": ["spin"]}, "bad.json")
    assert run_cli(["quantize", "--config", cfg], capsys)[0] == EXIT_ERROR


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("ACIQ_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("ACIQ_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("ACIQ_THREADS", "many")
    with pytest.raises(ConfigError):
        resolve_threads(None)
    with pytest.raises(ConfigError):
        resolve_threads(0)


def test_bad_thread_env_exit_code(monkeypatch, capsys):
    monkeypatch.setenv("ACIQ_THREADS", "zero")
    assert run_cli(["gauge"], capsys)[0] == EXIT_ERROR


def test_schema_forbids_unknown_keys_everywhere():
    def walk(node):
        if isinstance(node, dict):
            if node.get("type") == "object":
                assert node.get("additionalProperties") is False
            for v in node.values():
                walk(v)

    walk(CONFIG_SCHEMA)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "aciq", "spectrum", "--n", "400"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_OK
    assert proc.stdout.startswith("m,mu,K,level,eigenvalue,oracle_value,rel_err")


def test_convergence_failure_exit_code(monkeypatch, capsys):
    import aciq.cli as cli
    from aciq.errors import ConvergenceError

    def stuck(cfg, args):
        raise ConvergenceError("budget exhausted", 1.5, 0.25)

    monkeypatch.setitem(cli.HANDLERS, "moments", stuck)
    code, out, err = run_cli(["moments"], capsys)
    assert code == EXIT_ERROR and out == ""
    diag = json.loads(err)
    assert diag["error"] == "ConvergenceError" and diag["abs_err"] == 0.25
