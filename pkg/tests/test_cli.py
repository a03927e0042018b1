import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from phcgap import cli, optimizer as opt_mod
from phcgap.config import ConfigError, parse_config
from phcgap.optimizer import RunConfig
from phcgap.sdp import SdpSolution

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "run.schema.json").read_text())


def test_parse_defaults():
    assert parse_config("") == RunConfig()
    assert parse_config("# only a comment\n\n") == RunConfig()


def test_parse_values():
    cfg = parse_config(
        "material.eps_max = 11.4  # GaAs\n"
        "lattice.n = 16\npolarization = te\nband.m = 3\n"
        "init.kind = rods\ninit.radius = 0.3\noutput.snapshots = yes\n"
        "outer.move_limit = none\nsubspace.r_u = 0.2\n"
    )
    assert cfg.eps_max == 11.4
    assert (cfg.n, cfg.polarization, cfg.m, cfg.init_kind) == (16, "TE", 3, "rods")
    assert cfg.radius == 0.3 and cfg.snapshots is True and cfg.move_limit is None
    assert cfg.r_u == 0.2 and cfg.r_l == 0.1


@pytest.mark.parametrize(
    "text, key, line",
    [
        ("band.m = 0", "band.m", 1),
        ("\nlattice.n = sixteen", "lattice.n", 2),
        ("kpath.n_k = 12\nbogus.key = 1", "bogus.key", 2),
        ("\n\nmaterial.eps_min = 20", "material.eps_min", 3),
        ("output.snapshots = maybe", "output.snapshots", 1),
        ("lattice.n", "lattice.n", 1),
    ],
)
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "run.cfg")
    msg = str(err.value)
    assert key in msg and f"run.cfg:{line}" in msg


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _files(d):
    return sorted(p.name for p in Path(d).iterdir())


def test_bands_free_space(tmp_path):
    cfg = _write(tmp_path, "lattice.n = 16\ninit.kind = rods\ninit.radius = 0\n")
    out = tmp_path / "out"
    assert cli.main(["bands", str(cfg), "-o", str(out), "--m", "1,2,3"]) == 0
    assert _files(out) == ["bands.csv", "bands.svg", "design.csv", "design.svg", "summary.json"]
    summary = json.loads((out / "summary.json").read_text())
    assert [g["m"] for g in summary["gaps"]] == [1, 2, 3]
    assert all(g["gap_midgap"] <= 0 for g in summary["gaps"])


def test_bands_rods_has_gap(tmp_path):
    cfg = _write(tmp_path, "lattice.n = 16\ninit.kind = rods\n")
    out = tmp_path / "out"
    assert cli.main(["bands", str(cfg), "-o", str(out)]) == 0
    gap = json.loads((out / "summary.json").read_text())["gaps"][0]
    assert gap["m"] == 1 and gap["gap_midgap"] > 0
    for svg in ("bands.svg", "design.svg"):
        root = ET.parse(out / svg).getroot()
        assert root.tag.endswith("svg")
    with open(out / "bands.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["k_index", "k_x", "k_y", "band", "lambda", "omega_norm"]
    with open(out / "design.csv") as fh:
        assert list(next(csv.DictReader(fh))) == ["cell_row", "cell_col", "eps"]


def test_design_csv_roundtrip(tmp_path):
    cfg = _write(tmp_path, "lattice.n = 12\ninit.kind = uniform-random\ninit.seed = 5\nkpath.n_k = 6\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["bands", str(cfg), "-o", str(a)]) == 0
    assert cli.main(["bands", str(cfg), "-o", str(b), "--set", "init.kind=file",
                     "--set", f"init.file={a / 'design.csv'}"]) == 0
    la = np.loadtxt(a / "bands.csv", delimiter=",", skiprows=1)
    lb = np.loadtxt(b / "bands.csv", delimiter=",", skiprows=1)
    assert np.allclose(la, lb, rtol=1e-12, atol=0)
    assert (a / "design.csv").read_text() == (b / "design.csv").read_text()


def test_missing_config_no_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["bands", str(tmp_path / "nope.cfg"), "-o", str(out)]) == 1
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    cfg = _write(tmp_path, "band.m = 0\n")
    out = tmp_path / "out"
    assert cli.main(["optimize", str(cfg), "-o", str(out)]) == 1
    assert not out.exists()
    assert "band.m" in capsys.readouterr().err
    assert cli.main(["bands", str(cfg), "--set", "bogus=1"]) == 1


OPT = "lattice.n = 12\nkpath.n_k = 6\ninit.kind = uniform-random\ninit.seed = 1\n"


def _strip_times(text):
    data = json.loads(text)
    data.pop("created")
    for h in data["history"]:
        h.pop("wall_time")
    return data


def test_optimize_run_json(tmp_path):
    cfg = _write(tmp_path, OPT)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["optimize", str(cfg), "-o", str(a)]) == 0
    assert cli.main(["optimize", str(cfg), "-o", str(b)]) == 0
    run = json.loads((a / "run.json").read_text())
    jsonschema.validate(run, SCHEMA)
    assert run["termination"] == "converged"
    assert run["history"][-1]["step"] <= 1e-4
    assert _strip_times((a / "run.json").read_text()) == _strip_times((b / "run.json").read_text())
    assert (a / "design.csv").read_bytes() == (b / "design.csv").read_bytes()
    assert {"run.json", "design.csv", "bands.csv", "design.svg", "bands.svg"} <= set(_files(a))


def test_optimize_max_outer_one_and_dump(tmp_path):
    cfg = _write(tmp_path, OPT + "outer.max_iter = 1\n")
    out = tmp_path / "o"
    assert cli.main(["optimize", str(cfg), "-o", str(out), "--dump-sdp"]) == 0
    run = json.loads((out / "run.json").read_text())
    assert len(run["history"]) == 1
    assert (out / "sdp_000.txt").exists()


def test_optimize_restarts(tmp_path):
    cfg = _write(tmp_path, OPT + "restarts = 2\nouter.max_iter = 2\n")
    out = tmp_path / "o"
    assert cli.main(["optimize", str(cfg), "-o", str(out)]) == 0
    run = json.loads((out / "run.json").read_text())
    jsonschema.validate(run, SCHEMA)
    assert [r["seed"] for r in run["restarts"]] == [1, 2]
    assert run["final"]["gap_midgap"] == max(r["final_gap_midgap"] for r in run["restarts"])


def test_optimize_solver_failure_exit_2(tmp_path, monkeypatch):
    monkeypatch.setattr(opt_mod, "solve_sdp", lambda *a, **k: SdpSolution("numerical-failure", message="x"))
    cfg = _write(tmp_path, OPT)
    out = tmp_path / "o"
    assert cli.main(["optimize", str(cfg), "-o", str(out)]) == 2
    run = json.loads((out / "run.json").read_text())
    jsonschema.validate(run, SCHEMA)
    assert run["termination"] == "solver_failure"
    assert (out / "design.csv").exists()


def test_sweep(tmp_path):
    cfg = _write(tmp_path, OPT + "outer.max_iter = 1\n")
    out = tmp_path / "s"
    assert cli.main(["sweep", str(cfg), "-o", str(out), "--m", "1,2"]) == 0
    sweep = json.loads((out / "sweep.json").read_text())
    assert [r["m"] for r in sweep["runs"]] == [1, 2]
    for m in (1, 2):
        run = json.loads((out / f"m{m}" / "run.json").read_text())
        assert run["config"]["m"] == m
    assert cli.main(["sweep", str(cfg), "-o", str(out), "--m", "0"]) == 1


def test_snapshots(tmp_path):
    cfg = _write(tmp_path, OPT + "outer.max_iter = 2\noutput.snapshots = true\n")
    out = tmp_path / "o"
    assert cli.main(["optimize", str(cfg), "-o", str(out)]) == 0
    assert (out / "snapshots" / "design_000.csv").exists()
