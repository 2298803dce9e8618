import json
import math
import os

import numpy as np
import pytest

from cosmofate import cli, classifier, integrator
from cosmofate.dynamics import CosmoParams, State
from cosmofate.eos import EosModel
from cosmofate.integrator import Trajectory

RHO_STATIC = repr(1.0 / (4 * math.pi))


def run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_static_is_constant(tmp_path, capsys):
    out = tmp_path / "static.csv"
    code, _, _ = run(["simulate", "--eos", "dust", "--a0", "1", "--adot0", "0", "--rho0", RHO_STATIC,
                      "--preset", "natural", "--out", str(out)], capsys)
    assert code == 0
    tr = Trajectory.from_csv(out)
    assert np.ptp(tr.a) < 1e-10 and np.max(np.abs(tr.adot)) < 1e-10
    assert tr.t[-1] == 10.0


def test_dust_scan_rows(capsys):
    code, out, _ = run(["dust-scan", "--alpha", "0.1:3:100"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "alpha,branch,case,xi1,xi2,scenario"
    assert len(lines) == 101
    assert lines[1].split(",")[2] == "Case0_0"
    assert lines[-1].split(",")[-1] == "BB ↗ EE"


def test_dust_scan_json(capsys):
    code, out, _ = run(["dust-scan", "--alpha", "0.5:2:2", "--branch", "both", "--format", "json"], capsys)
    rows = json.loads(out)
    assert code == 0 and len(rows) == 4
    assert rows[2]["xi1"] is None


def test_classify_without_lambda(capsys):
    code, out, _ = run(["classify", "--eos", "gamma:1.3333", "--a0", "1", "--adot0", "1", "--rho0", "1",
                        "--lambda", "0"], capsys)
    assert code == 0
    assert json.loads(out)["past"]["label"] == "BB"


def test_cli_matches_library(capsys):
    code, out, _ = run(["classify", "--eos", "poly:1.6:0.5", "--a0", "1", "--adot0", "0.2", "--rho0", "0.7",
                        "--G", "0.9", "--lambda", "1.5"], capsys)
    rep = classifier.classify(CosmoParams(1.0, 0.9, 1.5), EosModel.polytropic_tail(1.6, 0.5),
                              State(1.0, 0.2, 0.7))
    assert out == cli.to_json(rep.to_dict())


def test_simulate_json_matches_library(capsys):
    code, out, _ = run(["simulate", "--eos", "gamma:1.5", "--a0", "1", "--adot0", "0.3", "--rho0", "0.2",
                        "--t-span", "0:-2", "--format", "json"], capsys)
    d = json.loads(out)
    tr = integrator.integrate(CosmoParams(), EosModel.gamma_law(1.5), State(1.0, 0.3, 0.2), (0.0, -2.0))
    assert d["samples"]["a"] == tr.a.tolist()
    assert d["status"] == tr.status


def test_outputs_are_deterministic(tmp_path, capsys):
    argv = ["simulate", "--eos", "neutron:0.5", "--a0", "1", "--adot0", "0.5", "--rho0", "2", "--t-span", "3"]
    paths = []
    for name in ("one.csv", "two.csv"):
        assert run(argv + ["--out", str(tmp_path / name)], capsys)[0] == 0
        paths.append((tmp_path / name).read_bytes())
    assert paths[0] == paths[1]
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]


def test_plotdata(tmp_path, capsys):
    pd = tmp_path / "plots"
    csv = tmp_path / "traj.csv"
    code, _, _ = run(["simulate", "--eos", "gamma:1.3333333333333333", "--a0", "1", "--adot0", "1",
                      "--rho0", "0.5", "--t-span", "0:-10", "--out", str(csv), "--plotdata", str(pd)], capsys)
    assert code == 0
    tr = Trajectory.from_csv(csv)
    for name in ("a", "rho", "adot"):
        data = np.loadtxt(pd / f"trajectory_{name}.dat")
        assert data.shape == (len(tr), 2)
        assert np.array_equal(data[:, 1], getattr(tr, name))
    # the Big Bang tail on log-log axes has slope 2/(3 Gamma)
    a = np.loadtxt(pd / "trajectory_a.dat")
    t_star = integrator.estimate_singular_time(
        integrator.integrate(CosmoParams(), EosModel.gamma_law(4 / 3), State(1.0, 1.0, 0.5), (0.0, -10.0)),
        "past").t_star
    tail = a[a[:, 1] < 1e-4]
    slope = np.polyfit(np.log(tail[:, 0] - t_star), np.log(tail[:, 1]), 1)[0]
    assert slope == pytest.approx(0.5, rel=0.01)


def test_emit_plotdata_io_error(tmp_path):
    tr = integrator.integrate(CosmoParams(), EosModel.dust(), State(1.0, 0.1, 0.1), (0.0, 1.0))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        cli.emit_plotdata(tr, blocker / "sub")


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(["classify", "--nonsense"], capsys)
    assert code == 64 and "usage" in err
    assert run(["teleport"], capsys)[0] == 64
    assert run([], capsys)[0] == 64
    code, _, err = run(["classify", "--eos", "gamma:2.5", "--a0", "1", "--adot0", "1", "--rho0", "1"], capsys)
    assert code == 2 and "domain" in err
    assert run(["simulate", "--a0", "-1", "--adot0", "0", "--rho0", "1"], capsys)[0] == 2
    code, _, err = run(["fit", "--regime", "latetime", "--a0", "1", "--adot0", "1", "--rho0", "0.01",
                        "--a-max-stop", "5"], capsys)
    assert code == 3 and "numerical" in err
    code, _, _ = run(["dust-scan", "--alpha", "0.5", "--out", str(tmp_path / "no" / "such" / "x.csv")], capsys)
    assert code == 74
    assert run(["--help"], capsys)[0] == 0


def test_fit_and_stability_commands(capsys):
    code, out, _ = run(["fit", "--regime", "bigbang", "--eos", "dust", "--a0", "1", "--adot0", "1",
                        "--rho0", "0.5"], capsys)
    assert code == 0
    fits = json.loads(out)["fits"]
    assert fits[0]["fitted"] == pytest.approx(2 / 3, rel=0.01)
    code, out, _ = run(["stability", "--epsilon", "1e-8"], capsys)
    assert code == 0 and json.loads(out)["rel_err"] < 0.01
    code, out, _ = run(["eos-check", "--eos", "neutron:1", "--rho-min", "1e-6", "--rho-max", "1e6"], capsys)
    assert code == 0 and json.loads(out)["a0_holds"]
    code, out, _ = run(["fit", "--regime", "latetime", "--a0", "1", "--adot0", "1", "--rho0", "0.01"], capsys)
    assert code == 0 and json.loads(out)["fits"][0]["rel_err"] < 0.005


def test_negative_span_start(capsys):
    code, out, _ = run(["simulate", "--eos", "dust", "--a0", "1", "--adot0", "0.5", "--rho0", "0.1",
                        "--t-span", "-1:0.5", "--format", "json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["samples"]["t"][0] == -1.0
    assert d["samples"]["t"][-1] == pytest.approx(0.5)
