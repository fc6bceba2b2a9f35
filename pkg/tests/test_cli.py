import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import scalar
from lqmfc.cli import run
from lqmfc.io import SWEEP_HEADER, read_sweep_csv
from lqmfc.problem import dump_problem


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "scalar.json"
    dump_problem(scalar(), path)
    return path


def _write(tmp_path, name, spec):
    path = tmp_path / name
    dump_problem(spec, path)
    return path


def test_validate_ok(spec_file, capsys):
    assert run(["validate", str(spec_file)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "ok"
    assert "digest=" in out


def test_validate_singular_r(tmp_path, capsys):
    path = _write(tmp_path, "bad.json", scalar(R=[[0.0]]))
    assert run(["validate", str(path)]) == 1
    cap = capsys.readouterr()
    assert "R not positive definite" in cap.out
    line = cap.err.strip()
    assert line.startswith("error kind=validation reason=") and "R" in line


def test_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["validate", str(bad)]) == 2
    assert capsys.readouterr().err.startswith("error kind=parse")
    assert run(["validate", str(tmp_path / "missing.json")]) == 2
    good = _write(tmp_path, "s.json", scalar())
    doc = json.loads(good.read_text())
    doc["colour"] = "blue"
    bad.write_text(json.dumps(doc))
    assert run(["validate", str(bad)]) == 2


def test_bad_arguments_exit_2(spec_file, tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["sweep", str(spec_file), "--output", str(tmp_path / "o.csv")])
    assert exc.value.code == 2
    assert run(["sweep", str(spec_file), "--output", str(tmp_path / "o.csv"), "--eps", "0.05,0.1"]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # a strongly unstable drift with large terminal weight drives the Riccati flow past the guard
    path = _write(tmp_path, "blow.json", scalar(A=[[40.0]], QT=[[1e6]]))
    code = run(["synthesize", str(path), "--output", str(tmp_path / "s.csv"), "--grid", "100"])
    assert code == 3
    assert capsys.readouterr().err.startswith("error kind=numerical reason=")


def test_sweep_cost_gap(spec_file, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert run(["sweep", str(spec_file), "--eps", "0.1,0.05,0.025", "--grid", "1000", "--gaussian", "--output", str(out)]) == 0
    text = out.read_text()
    assert tuple(text.splitlines()[0].split(",")) == SWEEP_HEADER
    table = read_sweep_csv(text)
    np.testing.assert_allclose(table[:, 0], [0.1, 0.05, 0.025])
    np.testing.assert_allclose(table[:, 5], [0.069315, 0.034657, 0.017329], atol=1e-6)
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["control_depends_on_eps"] is False
    assert side["grid_steps"] == 1000
    assert "timestamp" in side
    assert "digest=" in capsys.readouterr().out


def test_sweep_byte_identical(spec_file, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        args = ["sweep", str(spec_file), "--eps", "0.1,0.05", "--grid", "100", "--particles", "--samples", "200"]
        assert run(args + ["--seed", "11", "--no-timestamp", "--output", str(out)]) == 0
        outs.append((out.read_bytes(), out.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1]


def test_sweep_with_perturbations(spec_file, tmp_path):
    out = tmp_path / "s.csv"
    args = ["sweep", str(spec_file), "--eps", "0.05", "--grid", "200", "--perturbations", "5", "--no-timestamp"]
    assert run(args + ["--output", str(out)]) == 0
    records = json.loads(out.with_suffix(".json").read_text())["optimality"]
    assert len(records) == 6
    assert all(r["excess_det"] >= -1e-10 for r in records)


def test_roundtrip_17_digits(spec_file, tmp_path):
    out = tmp_path / "syn.csv"
    assert run(["synthesize", str(spec_file), "--grid", "50", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    assert header == ["t", "Sigma_1_1", "P_1_1", "K_1_1", "p_1", "k_1", "xbar_1", "ybar_1"]
    for ln in lines[1:]:
        for field in ln.split(","):
            assert format(float(field), ".17g") == field
    t, P = (np.array([float(ln.split(",")[i]) for ln in lines[1:]]) for i in (0, 2))
    np.testing.assert_allclose(P, 1 / (2 - t), atol=1e-10)


def test_simulate_dumps(spec_file, tmp_path):
    g = tmp_path / "g.csv"
    assert run(["simulate", str(spec_file), "--eps", "0.1", "--grid", "200", "--output", str(g)]) == 0
    last = g.read_text().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(0.5, abs=1e-9)
    assert float(last[2]) == pytest.approx(0.1625, abs=1e-8)

    z = tmp_path / "z.csv"
    assert run(["simulate", str(spec_file), "--control", "zero", "--grid", "10", "--output", str(z)]) == 0
    assert float(z.read_text().splitlines()[-1].split(",")[1]) == pytest.approx(1.0)

    pz = tmp_path / "p.csv"
    args = ["simulate", str(spec_file), "--particles", "--samples", "7", "--eps", "0.1", "--grid", "10"]
    assert run(args + ["--output", str(pz)]) == 0
    lines = pz.read_text().splitlines()
    assert lines[0] == "t,particle,x_1"
    assert len(lines) == 1 + 11 * 7


def test_module_entry_point(spec_file):
    proc = subprocess.run([sys.executable, "-m", "lqmfc", "validate", str(spec_file)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok")
