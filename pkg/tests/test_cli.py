import csv
import io
import json

import numpy as np
import pytest

from piq.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, bench_settings, main


@pytest.fixture
def data_csv(tmp_path):
    r = np.random.default_rng(0)
    X = r.standard_normal((40, 2))
    y = X @ np.array([1.0, -1.0]) + 0.1 * r.standard_normal(40)
    y[:3] += 10
    f = tmp_path / "d.csv"
    lines = ["x1,x2,y"] + [f"{a:.6f},{b:.6f},{c:.6f}" for (a, b), c in zip(X, y)]
    f.write_text("\n".join(lines) + "\n")
    return f


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_writes_estimate(data_csv, capsys):
    code, out, _ = _run(["fit", "--data", data_csv, "--response", "y", "--q-gamma", 3], capsys)
    assert code == EXIT_OK
    rec = json.loads(out)
    assert np.count_nonzero(rec["estimate"]["gamma"]) <= 3
    assert rec["estimate"]["support_gamma"] == [0, 1, 2]
    assert rec["manifest"]["command"] == "fit" and len(rec["manifest"]["input_digest"]) == 64
    assert "wall_clock" not in rec["manifest"]


def test_fit_is_byte_identical(data_csv, capsys):
    argv = ["fit", "--data", data_csv, "--response", "y", "--q-gamma", 3]
    assert _run(argv, capsys)[1] == _run(argv, capsys)[1]


def test_standardize_is_recorded(data_csv, capsys):
    _, out, _ = _run(["fit", "--data", data_csv, "--response", "y", "--q-gamma", 3, "--standardize"], capsys)
    rec = json.loads(out)
    assert rec["manifest"]["config"]["standardize"] is True
    assert rec["estimate"]["metadata"]["standardized"] is True


def test_missing_response_is_usage_error(data_csv, capsys):
    with pytest.raises(SystemExit) as e:
        main(["fit", "--data", str(data_csv)])
    assert e.value.code == EXIT_USAGE


def test_bad_config_and_data_errors(data_csv, tmp_path, capsys):
    code, _, err = _run(["fit", "--data", data_csv, "--response", "y", "--q-gamma", 30], capsys)
    assert code == EXIT_USAGE and "q_gamma" in err
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,2\nzz,3\n")
    code, _, err = _run(["fit", "--data", bad, "--response", "y"], capsys)
    assert code == EXIT_DATA and "row 3" in err
    code, _, _ = _run(["fit", "--data", tmp_path / "none.csv", "--response", "y"], capsys)
    assert code == EXIT_DATA


def test_tune_selects_and_reports(data_csv, capsys):
    code, out, err = _run(["tune", "--data", data_csv, "--response", "y", "--grid", "0,3,6"], capsys)
    assert code == EXIT_OK
    lines = out.splitlines()
    man = json.loads(lines[0][len("# manifest "):])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert [int(r["q"]) for r in rows] == [0, 3, 6]
    assert man["selected_q"] == json.loads(err)["selected_q_gamma"] == 3


def test_simulate_csv(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = _run(["simulate", "--example", 1, "--n", 100, "--ostar", 10, "--reps", 2, "--jobs", 1,
                       "--out", out], capsys)
    assert code == EXIT_OK
    text = out.read_text()
    assert text.startswith("# manifest ")
    rows = list(csv.reader(io.StringIO(text.split("\n", 1)[1])))
    assert rows[0][:6] == ["setting", "reps", "Err", "M", "JD", "FA"]
    assert int(rows[1][1]) == 2


def test_verify_passes(capsys):
    code, out, _ = _run(["verify", "--instances", 20], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["report"]["all_passed"] is True


def test_bench_settings_scales():
    assert [s[1] for s in bench_settings(False)] == [500, 500, 200, 200]
    full = bench_settings(True)
    assert full[0][1] == 1000 and full[2][2] == 1000


@pytest.mark.parametrize("cmd", ["fit", "tune", "simulate", "bench", "verify"])
def test_every_subcommand_has_help(cmd, capsys):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0
