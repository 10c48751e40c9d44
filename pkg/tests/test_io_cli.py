import json
import subprocess
import sys

import numpy as np
import pytest

from ppok import cli, io
from ppok.harness import Check, ConfigError, RunConfig, ValidationReport, run_suite


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_csv_roundtrip_and_special_floats():
    text = io.to_csv(("a", "b"), [(0.1, float("inf")), (1, float("nan"))])
    header, rows = io.read_csv(text)
    assert header == ["a", "b"] and rows == [["0.1", "inf"], ["1", "nan"]]
    assert float(rows[0][0]) == 0.1
    assert json.loads(io.to_json({"x": float("-inf"), "y": np.float64(2.5), "z": (1, 2)})) == {"x": "-inf", "y": 2.5, "z": [1, 2]}


def test_write_text_to_file(tmp_path):
    p = tmp_path / "sub" / "o.csv"
    io.write_text("x\n", p)
    assert p.read_text() == "x\n"


def test_simulate_csv_has_header_and_ten_paths(capsys):
    code, out, _ = run(["simulate", "--seed", "1"], capsys)
    assert code == 0
    header, rows = io.read_csv(out)
    assert header == list(io.PATH_HEADER)
    assert sorted({int(r[2]) for r in rows}) == list(range(10))
    for pid in range(10):
        v = [int(float(r[1])) for r in rows if int(r[2]) == pid]
        assert v[0] == 0 and all(b > a for a, b in zip(v, v[1:]))


def test_simulate_is_byte_identical_for_a_seed(capsys):
    argv = ["simulate", "--process", "tcppok1", "--sub", "gamma", "--sub-params", "3,4", "--seed", "5"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    _, c, _ = run(argv[:-1] + ["6"], capsys)
    assert a == b and a != c


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "5")
    _, env, _ = run(["simulate", "--n-paths", "2"], capsys)
    _, flag, _ = run(["simulate", "--n-paths", "2", "--seed", "5"], capsys)
    assert env == flag
    monkeypatch.setenv(cli.SEED_ENV, "five")
    assert run(["simulate"], capsys)[0] == 2


def test_simulate_json(capsys):
    code, out, _ = run(["simulate", "--format", "json", "--n-paths", "3", "--process", "tcppok2", "--sub", "ig", "--sub-params", "1,1"], capsys)
    assert code == 0
    paths = json.loads(out)["paths"]
    assert [p["path_id"] for p in paths] == [0, 1, 2]
    assert all(len(p["t"]) == len(p["value"]) for p in paths)


def test_larger_k_has_larger_mean(capsys):
    means = []
    for k in (3, 5):
        _, out, _ = run(["simulate", "--k", str(k), "--n-paths", "400", "--seed", "2"], capsys)
        _, rows = io.read_csv(out)
        last = {}
        for t, v, pid in rows:
            last[pid] = float(v)
        means.append(np.mean(list(last.values())))
    assert means[1] > means[0]


def test_pmf_table_total(capsys):
    code, out, _ = run(["pmf", "--k", "2", "--lambda", "1", "--t", "1"], capsys)
    assert code == 0
    header, rows = io.read_csv(out)
    assert header == list(io.PMF_HEADER) and rows[-1][0] == "total"
    assert abs(float(rows[-1][1]) - 1) < 1e-8
    _, out, _ = run(["pmf", "--n-max", "0", "--t", "1"], capsys)
    _, rows = io.read_csv(out)
    assert [r[0] for r in rows] == ["0", "total"]


def test_pmf_time_changed_json(capsys):
    code, out, _ = run(["pmf", "--process", "tcppok1", "--sub", "gamma", "--sub-params", "1,1", "--k", "2", "--lambda", "1", "--format", "json", "--n-max", "3"], capsys)
    assert code == 0
    assert json.loads(out)["rows"][0]["pmf"] == pytest.approx(1 / 3)


def test_ruin_csv_monotone_in_y(capsys):
    code, out, _ = run(["ruin", "--k", "2", "--lambda", "1", "--c", "4", "--n-paths", "2000", "--horizon", "50", "--u-grid", "0:2:1", "--seed", "3"], capsys)
    assert code == 0
    header, rows = io.read_csv(out)
    assert header == list(io.RUIN_HEADER)
    by_u = {}
    for u, y, g, se in rows:
        by_u.setdefault(u, []).append(float(g))
    assert all(np.all(np.diff(v) >= 0) for v in by_u.values())


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--k", "0"],
        ["simulate", "--lambda", "-1"],
        ["simulate", "--process", "tcppok1"],
        ["simulate", "--process", "tcppok1", "--sub", "gamma", "--sub-params", "1,2,3"],
        ["simulate", "--process", "tcppok1", "--sub", "gamma", "--sub-params=-1,2"],
        ["pmf", "--process", "tcppok1", "--sub", "ig", "--sub-params", "1,1", "--method", "closed", "--n-max", "2"],
        ["ruin", "--c", "2", "--process", "tcppok2", "--sub", "gamma", "--sub-params", "1,1"],
        ["simulate", "--step", "0"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err.startswith("error:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["simulate", "--format", "xml"])
    assert e.value.code == 2


def test_validate_exit_codes(capsys, monkeypatch, tmp_path):
    out = tmp_path / "r.json"
    code, _, err = run(["validate", "combinatorics", "--seed", "1", "--out", str(out)], capsys)
    assert code == 0 and "[PASS]" in err
    assert json.loads(out.read_text())["passed"] is True
    failing = ValidationReport("x", 0, [Check("c", 1.0, 0.0, False, "p")])
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: failing)
    assert run(["validate", "ppok"], capsys)[0] == 1


def test_validate_unknown_suite():
    with pytest.raises(ConfigError):
        run_suite("nope")
    with pytest.raises(ConfigError):
        RunConfig(fmt="xml")


def test_canary_perturbed_rate_fails():
    assert run_suite("ppok", seed=1).passed
    bad = run_suite("ppok", seed=1, rate_scale=2.0)
    assert not bad.passed and bad.failures


def test_report_json_is_deterministic():
    a = run_suite("combinatorics", seed=3).to_json()
    b = run_suite("combinatorics", seed=3).to_json()
    assert a == b and json.loads(a)["suite"] == "combinatorics"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ppok", "pmf", "--n-max", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("n,pmf,stderr")


def test_ruin_solver_curve_on_u_grid(capsys):
    argv = ["ruin", "--k", "1", "--lambda", "1", "--c", "2", "--n-paths", "500", "--horizon", "50", "--u-grid", "0:2:1", "--y-grid", "1", "--solve", "batch"]
    code, out, err = run(argv + ["--format", "json"], capsys)
    solver = json.loads(out)["solver"]
    assert code == 0 and solver["u"] == [0.0, 1.0, 2.0]
    assert solver["G"][0] == pytest.approx(0.31606, abs=1e-4)
    code, out, err = run(argv, capsys)
    assert code == 0 and out.startswith("u,y,G,stderr") and "u,G" in err
