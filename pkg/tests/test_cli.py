import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from oscgp import theoretical_moment
from oscgp.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_deterministic(tmp_path, capsys):
    args = ["simulate", "--model", "exp", "--theta", "1", "--alpha-plus", "2", "--alpha-minus", "1",
            "--dt", "0.01", "--n", "100000", "--seed", "42"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    with open(a) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "y", "x"] and len(rows) == 100_001
    t, y, x = map(float, rows[5])
    assert t == pytest.approx(0.04) and x == (2 * y if y > 0 else y)
    # 17 significant digits: values round-trip bit-exactly
    assert repr(float(rows[5][1])) == repr(y)


def test_estimate_end_to_end(tmp_path, capsys):
    path = tmp_path / "p.csv"
    main(["simulate", "--model", "exp", "--theta", "1", "--alpha-plus", "2", "--alpha-minus", "1",
          "--dt", "0.01", "--n", "100000", "--seed", "42", "--out", str(path)])
    capsys.readouterr()
    code, out, _ = run(["estimate", "--in", str(path), "--baseline-lp",
                        "--cov-model", '{"kind": "exp", "params": {"theta": 1}}'], capsys)
    assert code == 0
    d = json.loads(out)
    assert {"mu1_hat", "mu2_hat", "alpha_plus_hat", "alpha_minus_hat", "T", "delta_max", "branch"} <= set(d)
    # T = 1000 with sd(alpha_plus_hat) ~ 0.06 at this horizon
    assert d["alpha_plus_hat"] == pytest.approx(2.0, abs=0.3)
    assert d["alpha_minus_hat"] == pytest.approx(1.0, abs=0.3)
    assert d["T"] == pytest.approx(999.99)
    assert d["h_N"] == pytest.approx(math.sqrt(2 * (1 - math.exp(-0.01))))
    assert d["lp_baseline"]["alpha_plus_available"]
    assert d["config"]["branch"] == "both-positive"


def test_estimate_tx_file_and_self_similar(tmp_path, capsys):
    path = tmp_path / "tx.csv"
    u = np.exp(-np.linspace(3, 0, 31))
    with open(path, "w") as fh:
        fh.write("t,x\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(u, u ** 0.5)))
    code, out, _ = run(["estimate", "--in", str(path), "--self-similar", "--hurst", "0.5"], capsys)
    assert code == 0 and json.loads(out)["mu2_hat"] == pytest.approx(1.0)


def test_refvals(capsys):
    code, out, _ = run(["refvals", "--alpha-plus", "2", "--alpha-minus", "1", "--n-moments", "4"], capsys)
    assert code == 0
    d = json.loads(out)
    for n in range(1, 5):
        assert d[f"mu_{n}"] == pytest.approx(theoretical_moment(n, (2, 1)), rel=1e-15)
    assert len(d["hermite"]["f1"]) == 6 and d["hermite"]["f1"][1] == pytest.approx(1.5)


def test_series_check(capsys):
    code, out, _ = run(["series-check", "--max-mn", "2", "--a-step", "0.25", "--a-max", "0.75"], capsys)
    d = json.loads(out)
    assert code == 0 and d["passed"] and d["failures"] == 0
    code, out, _ = run(["series-check", "--max-mn", "1", "--a-step", "0.5", "--a-max", "0.5", "--tol", "1e-30"], capsys)
    assert code == 1 and not json.loads(out)["passed"]


def test_mc_verbs(tmp_path, capsys):
    cfg = {"model": {"kind": "exp", "params": {"theta": 1.0}}, "params": {"alpha_plus": 2, "alpha_minus": 1},
           "horizons": [10, 20, 40], "replications": 50, "mesh": {"rule": "fixed", "dt": 0.05}, "seed": 1}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["mc-consistency", "--config", str(path), "--out-dir", str(tmp_path / "c")], capsys)
    assert code == 0 and "alpha_plus" in json.loads(out)["slopes"]
    report = json.loads((tmp_path / "c" / "report.json").read_text())
    assert report["config"]["horizons"] == [10.0, 20.0, 40.0]
    assert (tmp_path / "c" / "raw_errors.csv").exists()
    cfg["replications"] = 200
    cfg["horizons"] = [20]
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["mc-clt", "--config", str(path), "--out-dir", str(tmp_path / "k")], capsys)
    assert code == 0 and "alpha_plus" in json.loads(out)["p_values"]
    cfg["replications"] = 100
    path.write_text(json.dumps(cfg))
    code, _, err = run(["mc-clt", "--config", str(path), "--out-dir", str(tmp_path / "k2")], capsys)
    assert code == 1 and "200" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["simulate", "--model", "exp"],
    ["simulate", "--model", "fgn", "--alpha-plus", "2", "--alpha-minus", "1", "--dt", "0.1", "--n", "10", "--seed", "1"],
    ["simulate", "--model", "exp", "--alpha-plus", "2", "--alpha-minus", "1", "--n", "10", "--seed", "1"],
    ["simulate", "--model", "exp", "--alpha-plus", "2", "--alpha-minus", "1", "--dt", "-1", "--n", "10", "--seed", "1"],
    ["refvals", "--alpha-plus", "2", "--alpha-minus", "1", "--bogus"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_runtime_error(tmp_path, capsys):
    code, _, err = run(["estimate", "--in", str(tmp_path / "missing.csv")], capsys)
    assert code == 1 and "error" in err
    code, _, err = run(["simulate", "--model", "exp", "--alpha-plus", "2", "--alpha-minus", "-1", "--dt", "0.1",
                        "--n", "5", "--seed", "1", "--out", str(tmp_path / "m.csv")], capsys)
    assert code == 0
    code, _, err = run(["simulate", "--model", "bifbm", "--hurst", "0.9", "--kk", "1.5", "--alpha-plus", "2",
                        "--alpha-minus", "1", "--dt", "0.1", "--n", "5", "--seed", "1"], capsys)
    assert code == 1


def test_bifbm_simulation(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(["simulate", "--model", "bifbm", "--hurst", "0.6", "--kk", "0.8", "--alpha-plus", "2",
                      "--alpha-minus", "1", "--auto-mesh", "--n", "200", "--t0", "0.01", "--seed", "3",
                      "--out", str(out)], capsys)
    assert code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (200, 3)
    assert data[1, 0] - data[0, 0] == pytest.approx(math.log(200) / 200)


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "oscgp.cli", "refvals", "--alpha-plus", "1", "--alpha-minus", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["mu_1"] == 0.0
    r = subprocess.run([sys.executable, "-m", "oscgp.cli"], capture_output=True, text=True)
    assert r.returncode == 2
