import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from informed_measure.cli import main, parse_args
from informed_measure.core import Sample, write_constraint_csv, write_sample


@pytest.fixture
def three(tmp_path):
    path = tmp_path / "s.txt"
    write_sample(path, Sample([-1.0, 0.0, 2.0]))
    return str(path)


@pytest.fixture
def normal(tmp_path):
    path = tmp_path / "n.txt"
    write_sample(path, Sample(np.random.default_rng(0).standard_normal(300)))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def usage_code(argv):
    with pytest.raises(SystemExit) as info:
        parse_args(argv)
    return info.value.code


def test_parse_examples():
    a = parse_args(["weights", "--method", "all", "--sample", "s.txt", "--g", "x,x^2", "--target", "0,1"])
    assert (a.command, a.method, a.g, a.target) == ("weights", "all", "x,x^2", "0,1")
    a = parse_args(["quantile", "--alpha", "0.5", "--sample", "s.txt", "--g", "x"])
    assert a.command == "quantile" and a.alpha == 0.5
    a = parse_args(["simulate", "quantile", "--n", "100,1000", "--reps", "10000", "--seed", "42"])
    assert (a.experiment, a.n, a.reps, a.seed) == ("quantile", [100, 1000], 10000, 42)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["weights", "--sample", "s.txt", "--bogus"],
        ["weights", "--g", "x"],
        ["quantile", "--sample", "s.txt", "--alpha", "1.5"],
        ["simulate", "nothing"],
        ["simulate", "lambda", "--n", "a,b"],
        ["simulate", "lambda", "--reps", "0"],
        ["simulate", "lambda", "--seed", "-3"],
        ["weights", "--sample", "s.txt", "--g", "x", "--grad-tol", "0"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert usage_code(argv) == 2


def test_weights_all(three, capsys):
    code, out, err = run(["weights", "--sample", three, "--g", "x", "--target", "0"], capsys)
    assert code == 0 and err == ""
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["index", "x", "w_el", "w_tilt", "w_closed"]
    w = np.array([[float(v) for v in r[2:]] for r in rows[1:]])
    np.testing.assert_allclose(w[:, 0], [4 / 9, 1 / 3, 2 / 9], atol=1e-10)
    np.testing.assert_allclose(w[:, 2], [3 / 7, 5 / 14, 3 / 14], atol=1e-12)
    assert "\r" not in out


def test_weights_single_method_and_dedup(normal, capsys):
    code, out, _ = run(["weights", "--sample", normal, "--g", "x,x^2,x", "--target", "0,1,0", "--method", "el", "--dedup"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "index,x,w_el"
    code, _, err = run(["weights", "--sample", normal, "--g", "x,x^2,x", "--target", "0,1,0", "--method", "el"], capsys)
    assert code == 1 and json.loads(err)["error"] == "RankDeficient"


def test_weights_from_constraint_csv(tmp_path, three, capsys):
    path = tmp_path / "g.csv"
    write_constraint_csv(path, [[-1.0], [0.0], [2.0]], ["x"])
    code, out, _ = run(["weights", "--sample", three, "--constraints", str(path), "--method", "closed"], capsys)
    assert code == 0 and out.splitlines()[1] == "0,-1.0,0.42857142857142855"
    code, _, err = run(["weights", "--sample", three, "--constraints", str(path), "--g", "x"], capsys)
    assert code == 2


def test_feasibility(three, capsys):
    code, out, err = run(["feasibility", "--sample", three, "--g", "x"], capsys)
    assert code == 0 and err == ""
    assert json.loads(out) == {"hull_member": True, "rank_condition": True, "effective_rank": 1, "kept_columns": [0]}
    assert out.count("\n") == 1
    code, out, _ = run(["feasibility", "--sample", three, "--g", "x", "--target", "5"], capsys)
    assert code == 0 and json.loads(out)["hull_member"] is False


def test_infeasible_is_exit_1(three, capsys):
    code, out, err = run(["weights", "--sample", three, "--g", "x", "--target", "5"], capsys)
    assert code == 1 and out == ""
    assert "InfeasibleConstraints" in err and len(err.strip().splitlines()) == 1
    assert json.loads(err)["error"] == "InfeasibleConstraints"


def test_no_convergence_reports_iterations(normal, capsys):
    code, _, err = run(["weights", "--sample", normal, "--g", "x,x^2", "--target", "0,1", "--method", "tilt", "--max-iter", "2"], capsys)
    payload = json.loads(err)
    assert code == 1 and payload["error"] == "NoConvergence" and payload["iterations"] == 2


def test_singular_variance_is_exit_1(tmp_path, capsys):
    path = tmp_path / "s.txt"
    write_sample(path, Sample([-1.0, 1.0, -1.0, 1.0]))
    code, _, err = run(["quantile", "--sample", str(path), "--g", "x,x^2", "--target", "0,1", "--alpha", "0.5"], capsys)
    assert code == 1 and json.loads(err)["error"] == "SingularVariance"


def test_quantile_and_ecdf(three, capsys):
    code, out, _ = run(["quantile", "--sample", three, "--g", "x", "--alpha", "0.5"], capsys)
    assert code == 0
    assert json.loads(out) == {"alpha": 0.5, "value": 0.0, "crossing_index": 1, "monotone_cdf": True, "method": "closed_form"}
    code, out, _ = run(["ecdf", "--sample", three, "--g", "x", "--t=-2,0,5", "--dist", "std_normal"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "F_n", "F_nI", "F"]
    assert float(rows[2][2]) == pytest.approx(11 / 14, abs=1e-12)
    assert float(rows[2][3]) == 0.5
    code, out, _ = run(["ecdf", "--sample", three, "--g", "x", "--points", "11"], capsys)
    assert len(out.splitlines()) == 12 and out.splitlines()[0] == "t,F_n,F_nI"


def test_config_file(tmp_path, three, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\nalpha = 0.25\nmethod=uniform\n")
    code, out, _ = run(["quantile", "--sample", three, "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["value"] == -1.0 and json.loads(out)["method"] == "uniform"
    # Flags override the file.
    code, out, _ = run(["quantile", "--sample", three, "--config", str(cfg), "--alpha", "0.9"], capsys)
    assert json.loads(out)["value"] == 2.0
    cfg.write_text("nope=1\n")
    assert usage_code(["quantile", "--sample", three, "--alpha", "0.5", "--config", str(cfg)]) == 2
    cfg.write_text("alpha=2\n")
    assert usage_code(["quantile", "--sample", three, "--config", str(cfg)]) == 2
    cfg.write_text("antithetic=maybe\n")
    assert usage_code(["simulate", "lambda", "--config", str(cfg)]) == 2


def test_missing_input_file_is_usage_error(capsys):
    code, _, err = run(["weights", "--sample", "/nonexistent/s.txt", "--g", "x"], capsys)
    assert code == 2 and "cannot read" in err


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    base = ["simulate", "closeness", "--n", "20,40", "--reps", "5", "--seed", "7"]
    code, out1, err = run(base, capsys)
    assert code == 0 and err == ""
    _, out2, _ = run(base, capsys)
    assert out1 == out2 and out1.splitlines()[0] == "n,replicate,ok,el_gap,tilt_gap"
    assert len(out1.splitlines()) == 11
    out_path, summary = tmp_path / "r.csv", tmp_path / "s.json"
    code, out, _ = run([*base, "--out", str(out_path), "--summary", str(summary)], capsys)
    assert code == 0 and out == ""
    assert out_path.read_text() == out1
    assert json.loads(summary.read_text())["experiment"] == "closeness"


def test_simulate_median_sequence(tmp_path, capsys):
    seq = tmp_path / "seq.csv"
    code, _, _ = run(["simulate", "quantile", "--n", "30", "--reps", "2", "--sequence", str(seq), "--out", str(tmp_path / "r.csv")], capsys)
    assert code == 0
    lines = seq.read_text().splitlines()
    assert lines[0] == "n,classical,informed,monotone_cdf" and len(lines) == 1 + 208


def test_module_entry_point(three):
    proc = subprocess.run(
        [sys.executable, "-m", "informed_measure", "feasibility", "--sample", three, "--g", "x", "--target", "9"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["hull_member"] is False
    proc = subprocess.run(
        [sys.executable, "-m", "informed_measure", "weights", "--sample", three, "--g", "x", "--target", "9"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 1 and proc.stdout == "" and "InfeasibleConstraints" in proc.stderr
