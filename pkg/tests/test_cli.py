import json

import pytest

from uhlenbeck.cli import main


def run(tmp_path, command, params, *extra):
    cfg = tmp_path / f"{command}.cfg.json"
    cfg.write_text(json.dumps({"command": command, "params": params}))
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def test_kappa_sign_change(tmp_path):
    code, out = run(tmp_path, "kappa", {"N": 2, "p_grid": [1, 0.01, 4]}, "--strict")
    assert code == 0
    summary = json.loads((out / "kappa.json").read_text())
    lo, hi = summary["sign_change_bracket"]
    assert lo < 4 - 2 * 2 ** 0.5 < hi
    lines = (out / "kappa.csv").read_text().splitlines()
    assert lines[0].startswith("# uhlenbeck kappa prng=numpy.PCG64")
    assert lines[1] == "p,N,kappa,sign,pass"


def test_identity_is_deterministic(tmp_path):
    code, out = run(tmp_path, "identity", {"trials": 30, "p": 1.5}, "--seed", "7", "--strict")
    first = (out / "identity.csv").read_bytes()
    assert code == 0
    run(tmp_path, "identity", {"trials": 30, "p": 1.5}, "--seed", "7")
    assert (out / "identity.csv").read_bytes() == first
    run(tmp_path, "identity", {"trials": 30, "p": 1.5}, "--seed", "8")
    assert (out / "identity.csv").read_bytes() != first


def test_sharpness_and_ellipsoid(tmp_path):
    code, out = run(tmp_path, "sharpness", {"delta": 0.5, "sigma": 0.5625, "restarts": 20,
                                            "iterations": 2000}, "--strict")
    assert code == 0
    row = (out / "sharpness.csv").read_text().splitlines()[2].split(",")
    assert -1e-4 <= float(row[3]) <= 1e-7
    code, _ = run(tmp_path, "ellipsoid", {"samples": 200}, "--strict")
    assert code == 0


def test_orlicz_solve_local(tmp_path):
    code, out = run(tmp_path, "orlicz", {"coefficients": [{"family": "power", "p": 3}], "eps": [0.5]},
                    "--strict")
    assert code == 0
    params = {"p": 1.5, "N": 2, "f": "sine_xy", "grid": 17, "eps_k_max": 6}
    code, out = run(tmp_path, "solve", params, "--strict")
    assert code == 0 and json.loads((out / "solve.json").read_text())["residual_norm"] <= 1e-10
    code, out = run(tmp_path, "local", {**params, "balls": [{"center": [0.5, 0.5], "R": 0.2}]},
                    "--strict")
    assert code == 0


def test_strict_failure_exit(tmp_path):
    # with a tolerance of 0 every residual row fails
    code, out = run(tmp_path, "identity", {"trials": 3, "p": 1.5, "tol": 1e-300}, "--strict")
    assert code == 1
    summary = json.loads((out / "identity.json").read_text())
    assert summary["failures"] > 0 and "point" in summary["failed_rows"][0]
    code, _ = run(tmp_path, "identity", {"trials": 3, "p": 1.5, "tol": 1e-300})
    assert code == 0


@pytest.mark.parametrize("params", [{"trails": 3}, {"trials": -1}, {"p": "x"}])
def test_config_errors(tmp_path, params, capsys):
    code, _ = run(tmp_path, "identity", params)
    assert code == 2 and "config error" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"params": {"N": 2,}}')
    assert main(["kappa", "--config", str(cfg)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_module_error_exit(tmp_path, capsys):
    params = {"p": 1.1, "N": 1, "grid": 9}
    code, _ = run(tmp_path, "solve", params)
    assert code == 1 and "DomainError" in capsys.readouterr().err


def test_stdout_output(capsys):
    assert main(["kappa"]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "p,N,kappa,sign,pass"
