"""Command-line interface: subcommands, config resolution, exit codes, files."""

import filecmp
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dipolekit import load_field

CSV_HEADER = "time,mass,impulse,lp,energy,center_x1,tau,perimeter,diameter"

SOLVE_CONFIG = """
# quick power-law profile; 64 rows keeps the speed-formula identity
# inside its tolerance (32 rows does not resolve the edge well enough)
[grid]
nrows = 64
ncols = 128
height = 1.1

[solve]
mu = 0.02
lambda = 91.7619
relaxation = 0.8
max_iter = 600
out_prefix = profile

[run]
seed = 3
"""

PATCH_CONFIG = """
[grid]
nrows = 32
ncols = 64
height = 2.2

[solve]
mode = patch
mu = 0.05
relaxation = 0.8
max_iter = 600
out_prefix = patch
"""


def _run(args, cwd, env_extra=None):
    env = dict(os.environ)
    env.pop("DIPOLEKIT_OUTPUT_DIR", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "dipolekit", *args],
        cwd=cwd,
        env=env,
        capture_output=True,
        text=True,
        timeout=300,
    )


def _write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def solved_dir(tmp_path_factory):
    """One solved quick profile reused by the dump/verify tests."""
    tmp = tmp_path_factory.mktemp("solved")
    cfgpath = _write_config(tmp, SOLVE_CONFIG)
    proc = _run(["solve", "--config", cfgpath], cwd=tmp)
    assert proc.returncode == 0, proc.stderr
    return tmp


@pytest.fixture(scope="module")
def patch_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("patch")
    cfgpath = _write_config(tmp, PATCH_CONFIG)
    proc = _run(["solve", "--config", cfgpath], cwd=tmp)
    assert proc.returncode == 0, proc.stderr
    return tmp


# ---------------------------------------------------------------------- solve

def test_solve_report_contents(solved_dir):
    doc = json.loads((solved_dir / "profile.json").read_text())
    for key in ("W", "gamma", "mu", "mass", "p", "lambda", "energy",
                "penalized_energy", "residual", "identities"):
        assert key in doc, key
    assert doc["converged"] is True
    assert doc["seed"] == 3
    assert doc["gamma"] == 0.0
    assert doc["p"] == 2.0
    assert doc["mu"] == pytest.approx(0.02, rel=1e-5)
    names = {rep["name"] for rep in doc["identities"]}
    assert {"pohozaev", "touching", "speed_formula_vs_multiplier"} <= names
    assert "near_wall_exponent" in names
    # the near-wall exponent fit needs ~96 rows to settle; don't demand it here
    for rep in doc["identities"]:
        if rep["name"] != "near_wall_exponent":
            assert rep["pass"], rep["name"]
    field = load_field(solved_dir / doc["field_dump"])
    assert field.values.shape == (64, 128)


def test_solve_deterministic_outputs(tmp_path):
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        cfgpath = _write_config(d, SOLVE_CONFIG)
        proc = _run(["solve", "--config", cfgpath], cwd=d)
        assert proc.returncode == 0, proc.stderr
    assert filecmp.cmp(tmp_path / "a" / "profile.json",
                       tmp_path / "b" / "profile.json", shallow=False)
    assert filecmp.cmp(tmp_path / "a" / "profile.field",
                       tmp_path / "b" / "profile.field", shallow=False)


def test_solve_flag_overrides_config(tmp_path):
    cfgpath = _write_config(tmp_path, SOLVE_CONFIG)
    proc = _run(["solve", "--config", cfgpath, "--seed", "9",
                 "--out-prefix", "alt"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads((tmp_path / "alt.json").read_text())
    assert doc["seed"] == 9


def test_solve_missing_key_named(tmp_path):
    broken = SOLVE_CONFIG.replace("mu = 0.02", "")
    cfgpath = _write_config(tmp_path, broken)
    proc = _run(["solve", "--config", cfgpath], cwd=tmp_path)
    assert proc.returncode == 1
    assert "solve.mu" in proc.stderr


def test_solve_invalid_value_named(tmp_path):
    broken = SOLVE_CONFIG.replace("nrows = 64", "nrows = lots")
    cfgpath = _write_config(tmp_path, broken)
    proc = _run(["solve", "--config", cfgpath], cwd=tmp_path)
    assert proc.returncode == 1
    assert "grid.nrows" in proc.stderr


def test_solve_bad_mode_named(tmp_path):
    cfgpath = _write_config(tmp_path, SOLVE_CONFIG)
    proc = _run(["solve", "--config", cfgpath, "--mode", "banana"],
                cwd=tmp_path)
    assert proc.returncode != 0


def test_solve_nonconverged_exits_two(tmp_path):
    cfgpath = _write_config(tmp_path, SOLVE_CONFIG)
    proc = _run(["solve", "--config", cfgpath, "--max-iter", "2"],
                cwd=tmp_path)
    assert proc.returncode == 2
    doc = json.loads((tmp_path / "profile.json").read_text())
    assert doc["converged"] is False
    assert doc["identities"] == []
    assert "note" in doc


def test_output_dir_env_and_flag_precedence(tmp_path):
    envdir = tmp_path / "fromenv"
    flagdir = tmp_path / "fromflag"
    envdir.mkdir()
    flagdir.mkdir()
    cfgpath = _write_config(tmp_path, SOLVE_CONFIG)
    proc = _run(["solve", "--config", cfgpath], cwd=tmp_path,
                env_extra={"DIPOLEKIT_OUTPUT_DIR": str(envdir)})
    assert proc.returncode == 0, proc.stderr
    assert (envdir / "profile.json").exists()
    proc = _run(["solve", "--config", cfgpath, "--output-dir", str(flagdir)],
                cwd=tmp_path, env_extra={"DIPOLEKIT_OUTPUT_DIR": str(envdir)})
    assert proc.returncode == 0, proc.stderr
    assert (flagdir / "profile.json").exists()


# --------------------------------------------------------------------- oracle

def test_oracle_passes_at_modest_resolution(tmp_path):
    proc = _run(["oracle", "--resolutions", "24,48"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads((tmp_path / "oracle_report.json").read_text())
    assert doc["all_pass"] is True
    assert any("residual" in rep["name"] for rep in doc["reports"])


def test_oracle_malformed_resolutions(tmp_path):
    proc = _run(["oracle", "--resolutions", "24,x"], cwd=tmp_path)
    assert proc.returncode == 1


# --------------------------------------------------------------------- evolve

def test_evolve_from_dump(patch_dir, tmp_path):
    dump = patch_dir / "patch.field"
    proc = _run(["evolve", "--source", "dump", "--dump", str(dump),
                 "--t-end", "0.2", "--dt", "0.02", "--record-every", "5",
                 "--target-count", "300"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    lines = (tmp_path / "evolution.csv").read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) >= 3
    times = [float(ln.split(",")[0]) for ln in lines[1:]]
    assert times == sorted(times)


def test_evolve_lamb_source(tmp_path):
    proc = _run(["evolve", "--source", "lamb", "--nrows", "24",
                 "--t-end", "0.1", "--dt", "0.02", "--record-every", "5",
                 "--target-count", "200", "--out", "lamb.csv"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "lamb.csv").exists()


def test_evolve_tailed_source(patch_dir, tmp_path):
    dump = patch_dir / "patch.field"
    proc = _run(["evolve", "--source", "tailed", "--dump", str(dump),
                 "--tail-epsilon", "0.08", "--tail-length", "0.9",
                 "--spike-center", "0.18", "--spike-halfwidth", "0.05",
                 "--t-end", "0.2", "--dt", "0.02", "--record-every", "5",
                 "--target-count", "300", "--out", "tail.csv"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    lines = (tmp_path / "tail.csv").read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    last = lines[-1].split(",")
    assert last[7] != ""  # perimeter recorded
    assert float(last[7]) > 0.0


def test_evolve_cfl_violation_exits_one(patch_dir, tmp_path):
    dump = patch_dir / "patch.field"
    proc = _run(["evolve", "--source", "dump", "--dump", str(dump),
                 "--t-end", "1.0", "--dt", "5.0", "--record-every", "1",
                 "--target-count", "200"], cwd=tmp_path)
    assert proc.returncode == 1
    assert "dt" in proc.stderr


def test_evolve_requires_dump_for_dump_source(tmp_path):
    proc = _run(["evolve", "--source", "dump", "--t-end", "0.1",
                 "--dt", "0.02", "--record-every", "5"], cwd=tmp_path)
    assert proc.returncode == 1


# --------------------------------------------------------------------- verify

def test_verify_accepts_intact_report(solved_dir):
    proc = _run(["verify", "profile.json"], cwd=solved_dir)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["all_pass"] is True


def test_verify_detects_tampered_scalar(solved_dir, tmp_path):
    doc = json.loads((solved_dir / "profile.json").read_text())
    doc["W"] *= 1.05
    (tmp_path / "profile.json").write_text(json.dumps(doc))
    field_src = (solved_dir / doc["field_dump"]).read_text()
    (tmp_path / doc["field_dump"]).write_text(field_src)
    proc = _run(["verify", "profile.json"], cwd=tmp_path)
    assert proc.returncode == 2


def test_verify_detects_tampered_field(solved_dir, tmp_path):
    doc = json.loads((solved_dir / "profile.json").read_text())
    (tmp_path / "profile.json").write_text(json.dumps(doc))
    lines = (solved_dir / doc["field_dump"]).read_text().strip().split("\n")
    i, j, v = lines[40].split(",")
    lines[40] = "%s,%s,%r" % (i, j, float(v) * 1.2)
    (tmp_path / doc["field_dump"]).write_text("\n".join(lines) + "\n")
    proc = _run(["verify", "profile.json"], cwd=tmp_path)
    assert proc.returncode == 2


def test_verify_missing_dump_errors(solved_dir, tmp_path):
    doc = json.loads((solved_dir / "profile.json").read_text())
    (tmp_path / "profile.json").write_text(json.dumps(doc))
    proc = _run(["verify", "profile.json"], cwd=tmp_path)
    assert proc.returncode == 1


# ----------------------------------------------------------------------- misc

def test_no_subcommand_is_usage_error(tmp_path):
    proc = _run([], cwd=tmp_path)
    assert proc.returncode == 1


def test_unknown_flag_rejected(tmp_path):
    proc = _run(["solve", "--frobnicate", "1"], cwd=tmp_path)
    assert proc.returncode == 1
