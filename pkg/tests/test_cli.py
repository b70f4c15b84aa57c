import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from adtkit.cli import main
from adtkit.config import parse_config_text, parse_operator
from adtkit.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.yaml"))
FIXTURES = ROOT / "tests" / "fixtures"

DEGENERATE = """\
model:
  kind: qsm-lattice
  params:
    n_sites: 3
    chain: {J: 1.0}
state:
  eigenstate: 0
operators: {initial: s+1, final: s-1}
tasks: [oracle-compare]
grid: {min: -3.0, max: 3.0, count: 61}
"""

NOT_EIGEN = """\
model:
  kind: qsm-bond
  params: {Jz: 1.0, hx: 0.3}
state:
  theta: 0.7
operators: {initial: s+0, final: s-0}
tasks: [cumulants, oracle-compare]
"""


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(argv):
    return main([str(a) for a in argv])


class TestValidate:
    @pytest.mark.parametrize("cfg", CONFIGS, ids=lambda p: p.stem)
    def test_examples_valid(self, cfg):
        assert run(["validate", cfg, "--quiet"]) == 0

    @pytest.mark.parametrize(
        "name,needle",
        [
            ("both_state_sources", "state.theta and state.eigenstate"),
            ("max_grade_too_large", "state.max_grade"),
            ("unknown_grid_key", "grid: unknown key(s) points"),
            ("syntax_error", "line 4"),
        ],
    )
    def test_fixtures_rejected(self, name, needle, capsys):
        assert run(["validate", FIXTURES / f"{name}.yaml"]) == 2
        assert needle in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["validate", tmp_path / "nope.yaml"]) == 2


class TestConfigParsing:
    def test_operator_tokens(self):
        op = parse_operator("0.5 sz0 sz1", 2, "k")
        assert op.coefficient("ZZ") == pytest.approx(0.125)
        assert parse_operator("XZ", 2, "k").coefficient("XZ") == 1
        summed = parse_operator(["sx0", "sx1"], 2, "k")
        assert summed.coefficient("XI") == summed.coefficient("IX") == 0.5

    def test_bad_operator(self):
        with pytest.raises(ConfigError, match="k"):
            parse_operator("sq0", 2, "k")

    def test_moments_cap(self):
        text = "model: {kind: qsm-bond, params: {Jz: 1}}\nstate: {theta: 0.1}\n" \
               "operators: {initial: sz0, final: sz0}\ntasks: [moments]\nmoments: {n_max: 13}\n"
        with pytest.raises(ConfigError, match="n_max"):
            parse_config_text(text)

    def test_unknown_top_key(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config_text("model: {kind: qsm-bond, params: {Jz: 1}}\nstate: {theta: 0.1}\n"
                              "tasks: [cumulants]\ncolour: red\n")


class TestRun:
    def test_greens_outputs(self, tmp_path):
        out = tmp_path / "o"
        assert run(["run", ROOT / "configs" / "ising_triplet_greens.yaml", "--out", out, "--quiet"]) == 0
        poles = read_rows(out / "poles.csv")
        plus = sorted(float(r["pole"]) for r in poles if r["kind"] == "plus")
        assert plus == pytest.approx([-0.5, 0.5], abs=1e-10)
        manifest = json.loads((out / "manifest.json").read_text())
        assert {"poles.csv", "greens.csv"} <= set(manifest["outputs"])
        assert manifest["checks_passed"] is True

    def test_cumulants_triplet(self, tmp_path):
        out = tmp_path / "o"
        assert run(["run", ROOT / "configs" / "theta_cumulants.yaml", "--out", out, "--quiet"]) == 0
        rows = {r["quantity"]: float(r["re"]) for r in read_rows(out / "cumulants.csv")}
        assert rows["D^x"] == pytest.approx(0.5)
        assert rows["D^y"] == pytest.approx(0.5)
        assert rows["D^z"] == pytest.approx(-0.5)

    def test_deterministic(self, tmp_path):
        cfg = ROOT / "configs" / "perturb_transverse.yaml"
        for name in ("a", "b"):
            assert run(["run", cfg, "--out", tmp_path / name, "--quiet"]) == 0
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ADTKIT_OUT", str(tmp_path / "env"))
        assert run(["run", ROOT / "configs" / "hubbard_atom.yaml", "--quiet"]) == 0
        assert (tmp_path / "env" / "manifest.json").exists()

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ADTKIT_OUT", str(tmp_path / "env"))
        assert run(["run", ROOT / "configs" / "hubbard_atom.yaml", "--out", tmp_path / "flag", "--quiet"]) == 0
        assert (tmp_path / "flag" / "manifest.json").exists()
        assert not (tmp_path / "env").exists()

    def test_seed_recorded(self, tmp_path):
        out = tmp_path / "o"
        assert run(["run", ROOT / "configs" / "hubbard_atom.yaml", "--out", out, "--seed", 42, "--quiet"]) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 42

    def test_failed_check_exits_1(self, tmp_path):
        cfg = tmp_path / "degenerate.yaml"
        cfg.write_text(DEGENERATE)
        out = tmp_path / "o"
        assert run(["run", cfg, "--out", out, "--quiet"]) == 1
        text = (out / "compare.txt").read_text()
        assert "verdict: FAIL" in text
        assert "static" in text

    def test_runtime_error_cleans_up(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(NOT_EIGEN)
        out = tmp_path / "o"
        assert run(["run", cfg, "--out", out, "--quiet"]) == 3
        assert "eigenvector" in capsys.readouterr().err
        assert list(out.iterdir()) == []

    def test_expectation_table_relative_path(self, tmp_path):
        shutil.copytree(ROOT / "configs", tmp_path / "configs")
        out = tmp_path / "o"
        assert run(["run", tmp_path / "configs" / "expectation_table.yaml", "--out", out, "--quiet"]) == 0

    def test_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "adtkit.cli", "validate", str(ROOT / "configs" / "kondo_local.yaml")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "ok" in proc.stdout
