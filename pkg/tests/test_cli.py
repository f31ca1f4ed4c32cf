import csv
import io
import json
import subprocess
import sys


from kmht.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_sample_is_deterministic(capsys):
    _, a, _ = run(["sample", "--dist", "one_sided_pareto2", "--n", "100", "--seed", "7"], capsys)
    _, b, _ = run(["sample", "--dist", "one_sided_pareto2", "--n", "100", "--seed", "7"], capsys)
    rows = a.splitlines()
    assert a == b and rows[0] == "x" and len(rows) == 101
    assert all(float(v) >= 1.0 for v in rows[1:])


def test_sample_asymmetric_params(capsys):
    code, out, _ = run(["sample", "--dist", "asym_pareto2", "--p", "1.0", "--n", "20", "--seed", "1"], capsys)
    assert code == 0 and all(float(v) >= 1 for v in out.splitlines()[1:])
    code, _, err = run(["sample", "--dist", "gaussian", "--p", "0.3", "--n", "5", "--seed", "1"], capsys)
    assert code == 2 and "does not take" in err


def test_solve(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("x\n1\n2\n3\n4\n")
    code, out, _ = run(["solve", "--input", str(f), "--k", "2", "--gamma", "0"], capsys)
    assert code == 0 and json.loads(out)["centers"] == [1.5, 3.5]


def test_solve_infeasible_exit_code(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("x\n1\n2\n")
    code, _, err = run(["solve", "--input", str(f), "--k", "2", "--gamma", "2"], capsys)
    assert code == 3 and "infeasible" in err


def test_solve_bad_csv(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("y\n1\n")
    assert run(["solve", "--input", str(f), "--k", "2"], capsys)[0] == 2
    assert run(["solve", "--input", str(tmp_path / "missing.csv"), "--k", "2"], capsys)[0] == 2


def test_landscape(tmp_path, capsys):
    summary = tmp_path / "l.json"
    code, out, _ = run(
        ["landscape", "--dist", "sym_pareto2", "--r-min", "-3", "--r-max", "3", "--steps", "601", "--summary", str(summary)],
        capsys,
    )
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 601
    at_zero = [r for r in rows if float(r["r"]) == 0.0]
    assert float(at_zero[0]["D"]) == -4.0
    assert json.loads(summary.read_text())["infimum"] == -4.0


def test_diagnose(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("x\n" + "1\n" * 20)
    code, out, _ = run(["diagnose", "--input", str(f)], capsys)
    assert code == 0 and json.loads(out)["sup_t_stat"] == 1.0


def test_usage_errors(capsys):
    assert run(["bogus"], capsys)[0] == 2
    assert run(["sample", "--dist", "sym_pareto2", "--n", "5", "--seed", "1", "--wat"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_experiment_from_config_with_overrides(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dist": {"family": "sym_pareto2", "params": {}}, "n_max": 200, "seeds": [0, 1]}))
    code, out, _ = run(["experiment", "inconsistency", "--config", str(cfg), "--seeds", "3", "--output", "o/inc"], capsys)
    assert code == 0
    summary = json.loads(out)
    assert [p["seed"] for p in summary["per_seed"]] == [3]
    assert (tmp_path / "o" / "inc.records.csv").exists()
    assert json.loads((tmp_path / "o" / "inc.summary.json").read_text()) == summary


def test_experiment_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["experiment", "naive", "--config", str(bad)], capsys)[0] == 2
    bad.write_text(json.dumps({"dist": {"family": "nope"}}))
    assert run(["experiment", "naive", "--config", str(bad)], capsys)[0] == 2
    assert run(["experiment", "naive"], capsys)[0] == 2


def test_experiment_is_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        prefix = tmp_path / f"r{i}" / "bd"
        args = ["experiment", "balanced-distortion", "--dist", "one_sided_pareto2", "--polylog", "2", "--n-max", "2000", "--seeds", "0,1", "--output", str(prefix)]
        assert run(args, capsys)[0] == 0
        outs.append((prefix.with_name("bd.records.csv").read_bytes(), prefix.with_name("bd.summary.json").read_bytes()))
    assert outs[0] == outs[1]


def test_figure1(tmp_path, capsys):
    code, _, _ = run(["figure1", "--seed", "1", "--n-max", "500", "--out-dir", str(tmp_path / "f")], capsys)
    assert code == 0
    samples = (tmp_path / "f" / "samples.csv").read_text().splitlines()
    assert samples[0] == "index,x" and len(samples) == 501
    traj = (tmp_path / "f" / "trajectory.csv").read_text().splitlines()
    assert traj[0].startswith("seed,n,center_1,center_2")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "kmht.cli", "sample", "--dist", "uniform", "--n", "3", "--seed", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and len(res.stdout.splitlines()) == 4
