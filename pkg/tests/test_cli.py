import json
import math
import pathlib
import subprocess
import sys
import time

import numpy as np
import pytest

from landau_limit.cli import run, build_parser, EXIT_OK, EXIT_USAGE, EXIT_ASSERT
from landau_limit.serialize import loads_json

GOLDEN = pathlib.Path(__file__).parent / "golden"


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def commands():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    return list(sub.choices)


@pytest.mark.parametrize("cmd", [None] + commands())
def test_help_matches_golden(cmd, capsys, monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    argv = ([] if cmd is None else [cmd]) + ["--help"]
    code, out, _ = call(capsys, *argv)
    assert code == EXIT_OK
    name = "help_main.txt" if cmd is None else f"help_{cmd}.txt"
    assert out == (GOLDEN / name).read_text()


def test_bessel_smoke(capsys):
    code, out, _ = call(capsys, "bessel", "--order", "2", "--gamma", "9")
    assert code == EXIT_OK
    rec = loads_json(out)
    assert rec["method"] in ("integral-quadrature", "asymptotic-series")
    assert rec["value"] == pytest.approx(6.2800649929670827e-05, rel=1e-12)


def test_bessel_domain_error(capsys):
    code, _, err = call(capsys, "bessel", "--order", "9", "--gamma", "2")
    assert code == EXIT_USAGE and "order" in err


def test_unknown_flag_prints_usage(capsys):
    code, _, err = call(capsys, "bessel", "--order", "2", "--gamma", "9", "--bogus")
    assert code == EXIT_USAGE
    assert err.startswith("usage:")


def test_unknown_command(capsys):
    code, _, err = call(capsys, "frobnicate")
    assert code == EXIT_USAGE and "usage:" in err


def test_kernel_rate_example(capsys):
    code, out, _ = call(capsys, "kernel-rate", "--c-list", "4,8,16,32", "--pairs", "500", "--seed", "7")
    rec = loads_json(out)
    assert code == EXIT_OK
    assert -2.3 <= rec["slope"] <= -1.7 and rec["seed"] == 7


def test_rate_failure_exits_2(capsys):
    # over c in [1, 1.5] the difference is far from the asymptotic regime
    code, out, _ = call(capsys, "mu-diff-rate", "--c-list", "1,1.2,1.5")
    assert code == EXIT_ASSERT and loads_json(out)["passed"] is False
    code, _, _ = call(capsys, "mu-diff-rate", "--c-list", "1,1.2,1.5", "--no-check")
    assert code == EXIT_OK


def test_repeated_abscissae_rejected(capsys):
    code, _, err = call(capsys, "kernel-rate", "--c-list", "4,4,8")
    assert code == EXIT_USAGE


def test_moments_csv(capsys):
    code, out, _ = call(capsys, "moments", "--c", "2")
    lines = out.splitlines()
    assert lines[0] == "kind,name_or_m,k,value"
    names = [l.split(",")[1] for l in lines[1:7]]
    assert names == ["C0", "Cb", "Cc", "rho_c", "rho_a", "Ca"]
    code, _, _ = call(capsys, "moments", "--c", "inf")
    assert code == EXIT_USAGE


def test_kernel_table(tmp_path, capsys):
    f = tmp_path / "pairs.csv"
    f.write_text("px,py,pz,qx,qy,qz\n0.1,0.2,0.3,-1,0.5,2\n1,1,1,0,0,0\n")
    code, out, _ = call(capsys, "kernel-table", "--c", "3", "--pairs", str(f))
    assert code == EXIT_OK
    rows = out.splitlines()
    assert len(rows) == 3 and len(rows[0].split(",")) == 6 + 6 + 6 + 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert call(capsys, "kernel-table", "--c", "3", "--pairs", str(bad))[0] == EXIT_USAGE
    same = tmp_path / "same.csv"
    same.write_text("px,py,pz,qx,qy,qz\n1,1,1,1,1,1\n")
    assert call(capsys, "kernel-table", "--c", "3", "--pairs", str(same))[0] == EXIT_USAGE


def test_sigma_json(capsys):
    code, out, _ = call(capsys, "sigma", "--c", "4", "--p", "1,0,0.5")
    rec = loads_json(out)
    S = np.array(rec["matrix"])
    assert np.allclose(S, S.T)
    assert rec["lambda1"] < rec["lambda2"]


def test_sigma_scan_csv(capsys):
    code, out, _ = call(capsys, "sigma-spectrum-scan", "--c-list", "2,inf", "--pmax", "4", "--npoints", "2")
    rows = out.splitlines()
    assert code == EXIT_OK and len(rows) == 1 + 4


def test_grid_commands(capsys):
    grid = ["--n", "8", "--radius", "5"]
    code, out, _ = call(capsys, "coercivity", "--c", "4", "--trials", "3", *grid)
    rec = loads_json(out)
    assert code == EXIT_OK and rec["min"] > 0 and rec["seed"] == 0
    code, out, _ = call(capsys, "op-diff-rate", "--c-list", "4,8,16,32", *grid)
    assert code == EXIT_OK
    code, out, _ = call(capsys, "gamma-moments", "--c", "4", "--tol", "1e-2", *grid)
    assert code == EXIT_OK and out.splitlines()[0] == "invariant,residual,passed"


def write_config(tmp_path, **kw):
    base = {"grid.n": 8, "grid.radius": 5.0, "T": 0.25, "init.profile": "two-species",
            "init.amplitude": 0.05, "seed": 1}
    base.update(kw)
    f = tmp_path / "run.cfg"
    f.write_text("".join(f"{k} = {v}\n" for k, v in base.items()))
    return f


def test_relax_trace(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out_file = tmp_path / "trace.csv"
    code, _, _ = call(capsys, "relax", "--mode", "linear", "--c", "inf", "--config", str(cfg),
                      "--output", str(out_file))
    lines = out_file.read_text().splitlines()
    assert code == EXIT_OK
    assert lines[0] == "t,mass,momx,momy,momz,energy,micro_l2,sigma_norm"
    assert float(lines[-1].split(",")[0]) == pytest.approx(0.25)


def test_limit_rate(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code, out, _ = call(capsys, "limit-rate", "--c-list", "4,8,16", "--T", "0.25", "--config", str(cfg))
    assert code == EXIT_OK and loads_json(out)["seed"] == 1


def test_missing_config_exits_1(tmp_path, capsys):
    for argv in (["verify-all"], ["relax", "--mode", "linear", "--c", "4"], ["limit-rate", "--c-list", "4,8,16"]):
        code, _, err = call(capsys, *argv, "--config", str(tmp_path / "nope.cfg"))
        assert code == EXIT_USAGE and "not found" in err


def test_bad_config_exits_1(tmp_path, capsys):
    cfg = write_config(tmp_path, **{"init.profile": "spiral"})
    code, _, _ = call(capsys, "relax", "--mode", "linear", "--c", "4", "--config", str(cfg))
    assert code == EXIT_USAGE


def test_threads_flag_and_env(capsys, monkeypatch):
    assert call(capsys, "bessel", "--order", "1", "--gamma", "2", "--threads", "1")[0] == EXIT_OK
    assert call(capsys, "bessel", "--order", "1", "--gamma", "2", "--threads", "0")[0] == EXIT_USAGE
    monkeypatch.setenv("LANDAU_LIMIT_THREADS", "two")
    assert call(capsys, "bessel", "--order", "1", "--gamma", "2")[0] == EXIT_USAGE
    monkeypatch.setenv("LANDAU_LIMIT_THREADS", "1")
    assert call(capsys, "bessel", "--order", "1", "--gamma", "2")[0] == EXIT_OK


def test_json_uses_17_significant_digits(capsys):
    _, out, _ = call(capsys, "bessel", "--order", "0", "--gamma", "1", "--scaled")
    token = out.split('"scaled": ')[1].split()[0]
    assert len(token.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) == 17


def test_verify_all_subset(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code, out, _ = call(capsys, "verify-all", "--config", str(cfg), "--only", "1", "2", "--quiet")
    rec = loads_json(out)
    assert code == EXIT_OK and [r["criterion"] for r in rec["results"]] == [1, 2]
    assert rec["inputs"]["seed"] == 1


def test_verify_all_fast_grid_is_deterministic_and_quick(tmp_path):
    cfg = write_config(tmp_path, **{"grid.n": 8, "seed": 3})
    reports = []
    for k in range(2):
        out = tmp_path / f"report{k}.json"
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "landau_limit.cli", "verify-all", "--config", str(cfg),
                               "--output", str(out), "--quiet"], capture_output=True, text=True)
        elapsed = time.perf_counter() - t0
        assert proc.returncode == EXIT_OK, proc.stderr
        assert elapsed <= 60.0
        reports.append(out.read_bytes())
    assert reports[0] == reports[1]
    rec = json.loads(reports[0])
    assert rec["passed"] and len(rec["results"]) == 11
    assert rec["tolerance_table"]["grid"] == [8, 5.0]
