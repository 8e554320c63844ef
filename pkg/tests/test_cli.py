import json
import subprocess
import sys

import pytest

from jetweil.cli import main


@pytest.fixture
def prod_file(tmp_path):
    path = tmp_path / "prod.slp"
    path.write_text("input a b\nt = mul a b\noutput t\n")
    return str(path)


@pytest.fixture
def x2y_file(tmp_path):
    path = tmp_path / "x2y.slp"
    path.write_text("input x y\nt = mul x x\nu = mul t y\noutput u\n")
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eval_plain(capsys, tmp_path):
    path = tmp_path / "sq.slp"
    path.write_text("input x\ny = pow x 2\noutput y\n")
    code, out, _ = run_cli(capsys, "eval", str(path), "--x", "3")
    assert code == 0
    assert out.strip() == "9.0"


def test_eval_json(capsys, prod_file):
    code, out, _ = run_cli(capsys, "eval", prod_file, "--x", "3,5", "--json")
    assert code == 0
    assert json.loads(out) == {"outputs": [15.0]}


def test_eval_malformed_file(capsys, tmp_path):
    path = tmp_path / "bad.slp"
    path.write_text("bogus\n")
    code, _, err = run_cli(capsys, "eval", str(path), "--x", "1")
    assert code == 2
    assert "line 1" in err


def test_eval_missing_file(capsys):
    code, _, err = run_cli(capsys, "eval", "/nonexistent.slp", "--x", "1")
    assert code == 2


def test_domain_error_exit_code(capsys, tmp_path):
    path = tmp_path / "log.slp"
    path.write_text("input x\ny = log x\noutput y\n")
    code, _, err = run_cli(capsys, "eval", str(path), "--x", "-1")
    assert code == 3
    assert "log" in err


def test_grad_product(capsys, prod_file):
    code, out, _ = run_cli(capsys, "grad", prod_file, "--x", "3,5", "--json")
    assert code == 0
    assert json.loads(out)["gradient"] == [5.0, 3.0]


def test_grad_identity_omega(capsys, tmp_path):
    path = tmp_path / "id.slp"
    path.write_text("input a b\noutput a b\n")
    code, out, _ = run_cli(capsys, "grad", str(path), "--x", "1,2",
                           "--omega", "0.5,0.25", "--json")
    assert code == 0
    assert json.loads(out)["gradient"] == [0.5, 0.25]


def test_grad_multi_output_needs_omega(capsys, tmp_path):
    path = tmp_path / "two.slp"
    path.write_text("input a b\noutput a b\n")
    code, _, err = run_cli(capsys, "grad", str(path), "--x", "1,2")
    assert code == 2
    assert "omega" in err


def test_grad_check_fields(capsys, prod_file):
    code, out, _ = run_cli(capsys, "grad", prod_file, "--x", "3,5",
                           "--check", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["check"]["pairing_residual"] <= 1e-10
    assert payload["check"]["fd_max_abs_diff"] <= 1e-4


def test_grad_deterministic(capsys, prod_file):
    _, out1, _ = run_cli(capsys, "grad", prod_file, "--x", "3,5",
                         "--check", "--seed", "9", "--json")
    _, out2, _ = run_cli(capsys, "grad", prod_file, "--x", "3,5",
                         "--check", "--seed", "9", "--json")
    assert out1 == out2


def test_taylor_table(capsys, x2y_file):
    code, out, _ = run_cli(capsys, "taylor", x2y_file, "--x", "1,2",
                           "--dirs", "1,0;0,1", "--caps", "2,1")
    assert code == 0
    payload = json.loads(out)
    entries = {tuple(e["alpha"]): e["value"][0] for e in payload["entries"]}
    assert entries[(1, 1)] == pytest.approx(2.0)
    assert entries[(2, 0)] == pytest.approx(4.0)
    assert entries[(0, 0)] == pytest.approx(2.0)


def test_taylor_envelope_and_tail(capsys, tmp_path):
    path = tmp_path / "exp.slp"
    path.write_text("input x\ny = exp x\noutput y\n")
    code, out, _ = run_cli(capsys, "taylor", str(path), "--x", "0",
                           "--dirs", "1", "--caps", "3",
                           "--envelope", "2.8,2.8,2.8,2.8",
                           "--tail", "2.8,0.5")
    assert code == 0
    payload = json.loads(out)
    assert payload["envelope"]["passed"]
    assert payload["tail_bound"]["value"] == pytest.approx(
        2.8 * 0.5 ** 4 / 24)


def test_taylor_max_dim_refusal(capsys, x2y_file):
    code, _, err = run_cli(capsys, "taylor", x2y_file, "--x", "1,2",
                           "--dirs", "1,0;0,1", "--caps", "30,30",
                           "--max-dim", "100")
    assert code == 2
    assert "961" in err


def test_taylor_env_var(capsys, x2y_file, monkeypatch):
    monkeypatch.setenv("JETWEIL_MAX_DIM", "4")
    code, _, err = run_cli(capsys, "taylor", x2y_file, "--x", "1,2",
                           "--dirs", "1,0;0,1", "--caps", "2,1")
    assert code == 2
    assert "exceeds limit 4" in err


def test_check_suite(capsys):
    code, out, _ = run_cli(capsys, "check", "envelope", "--count", "10",
                           "--json")
    assert code == 0
    assert "PASS" in out
    payload = json.loads(out[out.index("{"):])
    assert payload["results"][0]["violations"] == 0


def test_check_unknown_suite(capsys):
    code, _, _ = run_cli(capsys, "check", "nonsense")
    assert code == 2


def test_check_deterministic(capsys):
    _, out1, _ = run_cli(capsys, "check", "duality", "--count", "25",
                         "--seed", "3", "--json")
    _, out2, _ = run_cli(capsys, "check", "duality", "--count", "25",
                         "--seed", "3", "--json")
    assert out1 == out2


def test_check_parallel_matches_shape(capsys):
    code, out, _ = run_cli(capsys, "check", "duality", "--count", "40",
                           "--seed", "3", "--parallel", "--json")
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert payload["results"][0]["count"] == 40


def test_bench_mul_reported_not_gated(capsys):
    code, out, _ = run_cli(capsys, "bench", "--family", "mul", "--q", "40",
                           "--dims", "2,4,8,16,32", "--batch", "128",
                           "--repetitions", "5")
    assert code == 0
    payload = json.loads(out)
    report = payload["reports"][0]
    assert report["slope_in_window"] is None
    assert report["q"] == 40
    assert all(r["repetitions"] >= 5 for r in report["runs"])
    assert payload["nested"]["passes"] == 6


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "jetweil.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "eval" in proc.stdout
