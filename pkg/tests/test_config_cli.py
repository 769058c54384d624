import csv
import json
from pathlib import Path

import numpy as np
import pytest

from barogalerkin import ConfigError
from barogalerkin.cli import main
from barogalerkin.config import load_config, parse_config
from barogalerkin.diagnostics import CSV_COLUMNS
from barogalerkin.io import file_sha256

BASE = """\
schema_version: 1
model:
  N: 16
  R: 2
time:
  t_end: 0.5
  output_dt: 0.05
initial:
  preset: {preset}
{extra}output:
  snapshot_times: [0.0, 0.25]
"""


def write_config(tmp_path, preset="single_mode", extra="  k: 1\n  amplitude: 0.001\n", name="run.yaml", **replace):
    text = BASE.format(preset=preset, extra=extra)
    for old, new in replace.items():
        text = text.replace(old, new)
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], float)


def test_parse_defaults():
    cfg = parse_config({"schema_version": 1, "initial": {"preset": "stationary"}})
    assert cfg.params.N == 32 and cfg.t_end == 1.0 and cfg.formats == ("csv", "json")
    assert cfg.output_times()[0] == 0 and cfg.output_times()[-1] == 1.0


@pytest.mark.parametrize(
    "replace, fragment",
    [
        ({"  N: 16": "  N: 16\n  P: -1"}, ":4: field 'model.P'"),
        ({"  N: 16": "  N: sixteen"}, ":3: field 'model.N': expected a number"),
        ({"  R: 2": "  R: 2\n  viscosity: 1"}, ":5: field 'model.viscosity': unknown field"),
        ({"schema_version: 1": "schema_version: 7"}, ":1: field 'schema_version'"),
        ({"preset: single_mode": "preset: vortex"}, ":9: field 'initial.preset'"),
        ({"  t_end: 0.5": "  t_end: -1"}, ":6: field 'time.t_end'"),
        ({"[0.0, 0.25]": "[0.0, 9.0]"}, "field 'output.snapshot_times'"),
    ],
)
def test_config_errors_point_at_line(tmp_path, replace, fragment):
    path = write_config(tmp_path, **replace)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert fragment in str(info.value)
    assert str(path) in str(info.value)


def test_a1_violation_names_assumption(tmp_path, capsys):
    path = write_config(tmp_path, **{"  N: 16": "  N: 16\n  P: 0"})
    assert main(["run", str(path)]) == 1
    assert "A1" in capsys.readouterr().err


def test_yaml_syntax_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("schema_version: 1\nmodel: {N: 16\n")
    with pytest.raises(ConfigError, match="YAML syntax error"):
        load_config(path)


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path)
    assert main(["run", str(path), "--output-dir", str(out)]) == 0
    header, data = read_csv(out / "trajectory.csv")
    assert header == list(CSV_COLUMNS)
    assert len(data) == 11
    # k = 1 <= R: the mode is not damped
    assert np.max(np.abs(data[:, header.index("dissipation_cum")])) < 1e-12
    snaps = sorted((out / "snapshots").iterdir())
    assert len(snaps) == 2
    with open(snaps[0]) as fh:
        assert fh.readline().strip() == "x,v,xi,rho,r"
    manifest = json.loads((out / "manifest.json").read_text())
    listed = manifest["files"]
    on_disk = {str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"}
    assert set(listed) == on_disk
    for rel, digest in listed.items():
        assert file_sha256(out / rel) == digest
    assert manifest["config"]["initial"]["preset"] == "single_mode"
    assert {"numpy", "scipy", "python"} <= set(manifest["versions"])
    assert all(m["passed"] for m in manifest["monitors"].values() if m["hard"])


def test_stationary_run_is_constant(tmp_path):
    out = tmp_path / "out"
    path = write_config(tmp_path, preset="stationary", extra="")
    assert main(["run", str(path), "--output-dir", str(out)]) == 0
    header, data = read_csv(out / "trajectory.csv")
    for name in ("total_energy", "eta", "volume", "pi", "xi_min", "xi_max"):
        col = data[:, header.index(name)]
        assert np.all(col == col[0]), name


def test_runs_are_bit_identical(tmp_path):
    path = write_config(tmp_path, preset="analytic_mixed", extra="  amplitude: 0.01\n")
    for name in ("a", "b"):
        assert main(["run", str(path), "--output-dir", str(tmp_path / name)]) == 0
    for rel in ("trajectory.csv", "trajectory.json", "manifest.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_output_dir_precedence(tmp_path, monkeypatch):
    path = write_config(tmp_path)
    monkeypatch.setenv("BAROGALERKIN_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "env" / "trajectory.csv").is_file()
    assert main(["run", str(path), "--output-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "trajectory.csv").is_file()


def test_custom_initial_data(tmp_path):
    x = np.linspace(0, 1, 65)
    data = np.column_stack([x, 0.01 * np.sqrt(2) * np.cos(3 * np.pi * x), np.ones_like(x)])
    np.savetxt(tmp_path / "init.csv", data, delimiter=",", header="x,v,xi", comments="")
    path = write_config(tmp_path, preset="custom", extra="  file: init.csv\n")
    cfg = load_config(path)
    from barogalerkin import initial_state

    s = initial_state(cfg.initial_data(), cfg.params)
    assert s.alpha[2] == pytest.approx(0.01, rel=1e-12)


def test_solver_error_exit_code(tmp_path):
    extra = "  k: 1\n  amplitude: 3.0\n"
    path = write_config(tmp_path, extra=extra, **{"  R: 2": "  R: 2\n  xi_floor: 0.5"})
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 3


def test_stationary_command(capsys):
    assert main(["stationary"]) == 0
    assert "xi*        = 1\n" in capsys.readouterr().out
    assert main(["stationary", "--a", "2"]) == 0
    assert "1.14869835499704" in capsys.readouterr().out
    assert main(["stationary", "--pi0", "3"]) == 0
    assert "bracket    = (1, 3)" in capsys.readouterr().out
    assert main(["stationary", "--P", "-1"]) == 1


def test_verify_catches_mutation(capsys):
    assert main(["verify", "--only", "2", "--mutation", "flip_pressure"]) == 2
    out = capsys.readouterr().out
    assert "[FAIL]  2" in out and "0/1 criteria passed" in out


def test_sweep_over_R(tmp_path):
    path = write_config(tmp_path, preset="analytic_mixed", extra="  amplitude: 0.01\n")
    out = tmp_path / "sw"
    code = main(["sweep", str(path), "--axis", "R", "--values", "0,1,2,3,4,20", "--jobs", "2", "--output-dir", str(out)])
    assert code == 1  # R = 20 >= N is rejected, the other runs still complete
    with open(out / "sweep_R" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["ok"] * 5 + ["config_error"]
    diss = [float(r["dissipation_cum"]) for r in rows[:5]]
    assert all(a >= b for a, b in zip(diss, diss[1:]))


def test_sweep_over_mu_counts_substeps(tmp_path):
    path = write_config(tmp_path, preset="boundary_relax", extra="  factor: 1.5\n")
    out = tmp_path / "sw"
    assert main(["sweep", str(path), "--axis", "mu", "--values", "0.1,0.01", "--jobs", "1", "--output-dir", str(out)]) == 0
    with open(out / "sweep_mu" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert int(rows[0]["boundary_substeps"]) < int(rows[1]["boundary_substeps"])


def test_sweep_over_N_converges(tmp_path):
    path = write_config(tmp_path, preset="analytic_mixed", extra="  amplitude: 0.01\n")
    out = tmp_path / "sw"
    assert main(["sweep", str(path), "--axis", "N", "--values", "8,16,32,64", "--output-dir", str(out)]) == 0
    with open(out / "sweep_N" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["energy_change"] == ""
    change = [float(r["energy_change"]) for r in rows[1:]]
    assert change[0] > change[1] > change[2]
