import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import jsonschema
import numpy as np
import pytest

from mwl.cli import main
from mwl.report import BOUND_HEADER, TAIL_HEADER, load_schema


def write_config(path, **over):
    doc = {
        "version": 1,
        "manifold": {"family": "sphere", "dim": 1, "radius": 1.0},
        "sampling": {"method": "epsilon_net", "epsilon": 0.1, "mc_points": 50000, "seed": 42},
        "graph": {"kappa": 0.4},
        "walk": {"K": 4, "trials": 1000, "observable": "random", "r": 1.0, "seed": 3, "shape": [2, 2]},
        "polynomial": {"coeffs": [0, 1], "s": 1},
        "bound": {"theta": {"n": 12, "stretch": 8.0}, "envelope": {"C_const": 0.3}},
    }
    for block, fields in over.items():
        doc[block].update(fields)
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def cfg(tmp_path):
    return write_config(tmp_path / "cfg.json")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_build_graph_is_deterministic(tmp_path, cfg):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["build-graph", "--config", cfg, "--out", str(a)]) == 0
    assert main(["build-graph", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["kappa"] == 0.4 and doc["dim"] == 1


def test_disconnected_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.json", graph={"kappa": 0.01})
    assert main(["build-graph", "--config", cfg, "--out", str(tmp_path / "g.json")]) == 3


def test_coverage_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", manifold={"dim": 2}, sampling={"epsilon": 0.001})
    assert main(["build-graph", "--config", cfg, "--out", str(tmp_path / "g.json")]) == 2
    assert "[graph]" in capsys.readouterr().err


def test_unwritable_path_exit_code(tmp_path, cfg):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["build-graph", "--config", cfg, "--out", str(blocker / "g.json")]) == 4
    assert main(["build-graph", "--config", str(tmp_path / "none.json"), "--out", "x"]) == 4


def test_precondition_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.json", walk={"K": 5})
    assert main(["experiment", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 6


def test_malformed_config_exit_code(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"version": 1, "walk": {"K": "four"}}')
    assert main(["build-graph", "--config", str(p), "--out", str(tmp_path / "g.json")]) == 5


def lattice_graph(tmp_path, n, kappa):
    cfg = write_config(tmp_path / f"lat{n}.json", sampling={"method": "lattice", "n_points": n},
                       graph={"kappa": kappa})
    out = tmp_path / f"lat{n}.graph.json"
    assert main(["build-graph", "--config", cfg, "--out", str(out)]) == 0
    return str(out)


def test_spectrum_triangle_fixture(tmp_path):
    g = lattice_graph(tmp_path, 3, 2.2)
    out = tmp_path / "s.json"
    assert main(["spectrum", "--graph", g, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["transition_eigs"][1] == pytest.approx(-0.5, abs=1e-12)
    assert doc["gap_algebraic"] == pytest.approx(1.5, abs=1e-12)
    assert doc["gap_absolute"] == pytest.approx(0.5, abs=1e-12)


def test_spectrum_regular_fixture(tmp_path):
    g = lattice_graph(tmp_path, 60, 4 * np.pi / 60)
    out = tmp_path / "s.json"
    assert main(["spectrum", "--graph", g, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["eq7_max_residual"] <= 1e-10


def test_spectrum_truncated_json(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text('{"version": 1,\n "dim": 1, "kappa"')
    assert main(["spectrum", "--graph", str(p), "--out", str(tmp_path / "s.json")]) == 5
    assert "line 2, column" in capsys.readouterr().err


def test_walk_and_bound_tables(tmp_path, cfg):
    g = tmp_path / "g.json"
    assert main(["build-graph", "--config", cfg, "--out", str(g)]) == 0
    assert main(["walk", "--graph", str(g), "--config", cfg, "--out", str(tmp_path / "t.csv")]) == 0
    assert main(["bound", "--graph", str(g), "--config", cfg, "--out", str(tmp_path / "b.csv")]) == 0
    tail = read_csv(tmp_path / "t.csv")
    assert tuple(tail[0]) == TAIL_HEADER and len(tail) == 13
    probs = [float(r[1]) for r in tail[1:]]
    assert probs == sorted(probs, reverse=True)
    bound = read_csv(tmp_path / "b.csv")
    assert tuple(bound[0]) == BOUND_HEADER
    sources = {r[1] for r in bound[1:]}
    assert sources == {"exact_spectrum:absolute_second", "exact_spectrum:algebraic_second",
                       "eq7_formula", "envelope_lower", "envelope_upper"}
    assert all(0 <= float(r[5]) <= 1 for r in bound[1:])


def test_experiment_outputs(tmp_path, cfg):
    out = tmp_path / "run"
    assert main(["experiment", "--config", cfg, "--out-dir", str(out), "--svg"]) == 0
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, load_schema())
    assert set(report["timings"]) == {"sampling", "graph", "spectrum", "walk", "bound"}
    assert report["assumption3"]["ok"]
    ET.fromstring((out / "tail.svg").read_text())
    # the config echo alone reproduces the run
    echo = tmp_path / "echo.json"
    echo.write_text(json.dumps(report["config"]))
    again = tmp_path / "again"
    assert main(["experiment", "--config", str(echo), "--out-dir", str(again)]) == 0
    for name in ("tail.csv", "bound.csv", "graph.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_fit_envelope_command(tmp_path, capsys):
    graphs = []
    for eps in (0.1, 0.05):
        cfg = write_config(tmp_path / f"c{eps}.json", sampling={"epsilon": eps}, graph={"kappa": 4 * eps})
        g = tmp_path / f"g{eps}.json"
        assert main(["build-graph", "--config", cfg, "--out", str(g)]) == 0
        graphs.append(str(g))
    out = tmp_path / "fit.json"
    assert main(["fit-envelope", "--graphs", *graphs, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["C_const"] >= 0 and not doc["degenerate"]
    assert "empirical" in doc["label"]
    assert main(["fit-envelope", "--graphs", graphs[0], graphs[0], "--out", str(out)]) == 0
    assert json.loads(out.read_text())["degenerate"]
    assert "degenerate" in capsys.readouterr().err


def test_fit_envelope_rejects_mixed_manifolds(tmp_path):
    c1 = write_config(tmp_path / "c1.json")
    c2 = write_config(tmp_path / "c2.json", manifold={"dim": 2}, sampling={"epsilon": 0.5},
                      graph={"kappa": 1.2})
    g1, g2 = tmp_path / "g1.json", tmp_path / "g2.json"
    assert main(["build-graph", "--config", c1, "--out", str(g1)]) == 0
    assert main(["build-graph", "--config", c2, "--out", str(g2)]) == 0
    assert main(["fit-envelope", "--graphs", str(g1), str(g2), "--out", str(tmp_path / "f.json")]) == 6


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "mwl", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "experiment" in out.stdout
