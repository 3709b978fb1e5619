import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from tilewave.cli import ConfigError, main, resolve


def _cfg(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(kw))
    return str(p)


def _run(args, env=None):
    return CliRunner().invoke(main, ["run", *args], env=env)


def test_missing_config_exits_2(tmp_path):
    r = _run(["--config", str(tmp_path / "nope.json")])
    assert r.exit_code == 2


@pytest.mark.parametrize("cfg", [
    {"suite": "no-such-suite"},
    {"suite": "tree-lemma", "bogus": 1},
    {"suite": "tree-lemma", "grid_m": 5},
    {"suite": "tree-lemma", "grid_m": 15},
    {"suite": "tree-lemma", "nu": 6},
])
def test_bad_config_exits_2(tmp_path, cfg):
    r = _run(["--config", _cfg(tmp_path, **cfg), "--outdir", str(tmp_path)])
    assert r.exit_code == 2
    assert not (tmp_path / f"{cfg['suite']}.csv").exists()


def test_invalid_json_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{suite: ")
    assert _run(["--config", str(p)]).exit_code == 2


def test_flags_override_file():
    cfg = resolve({"suite": "tree-lemma", "grid_m": 8, "seed": 1}, suite="bilinear", seed=4, grid_m=None)
    assert cfg["suite"] == "bilinear" and cfg["seed"] == 4 and cfg["grid_m"] == 8
    with pytest.raises(ConfigError):
        resolve({"suite": "bilinear", "grid_m": 20})


def test_passing_suite_exits_0_and_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, suite="tree-lemma", grid_m=6, instances=6, blocks=[-6, -3, 1])
    a, b = tmp_path / "a", tmp_path / "b"
    r1 = _run(["--config", cfg, "--outdir", str(a), "--jobs", "1"])
    r2 = _run(["--config", cfg, "--outdir", str(b), "--jobs", "2"])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0, r2.output
    assert "PASS" in r1.output
    assert (a / "tree-lemma.csv").read_bytes() == (b / "tree-lemma.csv").read_bytes()


def test_failing_assertion_exits_1_and_names_row(tmp_path):
    cfg = _cfg(tmp_path, suite="tree-lemma", grid_m=6, instances=4, ratio_cap=1e-12, blocks=[-6, -3, 1])
    r = _run(["--config", cfg, "--outdir", str(tmp_path)])
    assert r.exit_code == 1
    assert "FAIL" in r.output and "row" in r.output


def test_outdir_from_environment_and_plot(tmp_path):
    out = tmp_path / "env_out"
    cfg = _cfg(tmp_path, suite="bilinear", grid_m=6, instances=4, blocks=[-6, -3, 1])
    r = _run(["--config", cfg, "--plot"], env={"TILEWAVE_OUTDIR": str(out)})
    assert r.exit_code == 0, r.output
    assert (out / "bilinear.csv").exists()
    svg = (out / "bilinear.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    first = (out / "bilinear.svg").read_bytes()
    _run(["--config", cfg, "--plot"], env={"TILEWAVE_OUTDIR": str(out)})
    assert (out / "bilinear.svg").read_bytes() == first


def test_exploratory_suite_never_fails(tmp_path):
    cfg = _cfg(tmp_path, suite="conjecture-jh", grid_m=7)
    r = _run(["--config", cfg, "--outdir", str(tmp_path)])
    assert r.exit_code == 0
    assert "exploratory" in r.output
    assert (tmp_path / "conjecture-jh.csv").read_text().count("\n") >= 4


def test_console_script_entry(tmp_path):
    cfg = _cfg(tmp_path, suite="nothing")
    r = subprocess.run([sys.executable, "-m", "tilewave.cli", "run", "--config", cfg], capture_output=True, text=True)
    assert r.returncode == 2 and "unknown suite" in r.stderr
