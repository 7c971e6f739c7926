import json
import subprocess
import sys

import pytest

from sasakiflow.cli import main
from sasakiflow.config import ConfigError, RunConfig, build_config, load_config, parse_config


def test_defaults_round_trip():
    cfg = build_config({})
    again = build_config(parse_config(cfg.to_text()))
    assert again == cfg


@pytest.mark.parametrize("pairs", [
    {"model.colour": "red"},
    {"grid.n": "abc"},
    {"grid.n": "8"},
    {"flow.t_end": "-1"},
    {"flow.t_end": "nan"},
    {"conjugate.variant": "X"},
    {"conjugate.t_max": "1.0"},
    {"model.family": "lens"},
    {"model.family": "round", "model.a": "2"},
    {"output.svg": "maybe"},
])
def test_strict_rejection(pairs):
    with pytest.raises(ConfigError):
        build_config(pairs)


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("seed = 1\nseed = 2\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("seed = 1\njunk\n")
    assert parse_config("# comment\nseed = 3  # trailing\n") == {"seed": "3"}


def test_load_with_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("model.family = weighted\nmodel.b = 1.4142135623730951\nseed = 4\n")
    cfg = load_config(p, {"seed": "9"})
    assert cfg.model_family == "weighted" and cfg.seed == 9


def test_rng_streams_independent_and_reproducible():
    cfg = build_config({"seed": "5"})
    a, b = cfg.rng(1).random(4), cfg.rng(2).random(4)
    assert (a != b).any()
    assert (cfg.rng(1).random(4) == a).all()


def test_every_key_has_cli_flag():
    from sasakiflow.cli import build_parser

    parser = build_parser()
    for key in RunConfig.keys():
        args = parser.parse_args(["selftest", f"--{key}", "x"])
        assert getattr(args, key) == "x"


def test_exit_code_config_error(capsys):
    assert main(["selftest", "--grid.n", "abc"]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["selftest", "--config", "/nonexistent/file"]) == 2


def test_exit_code_numerical_failure(capsys):
    # a valid but strongly weighted model loses positivity under the P2 bump
    code = main(["simulate", "--model.family", "weighted", "--model.b", "20", "--flow.eps", "0.33",
                 "--flow.t_end", "0.5", "--output.dir", "/tmp/sasakiflow-unused"])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_entropy_and_mu_commands(capsys):
    assert main(["entropy", "--grid.n", "32", "--flow.t_end", "1", "--conjugate.states", "41", "--at", "0.5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "F" in json.dumps(out)
    assert main(["mu", "--grid.n", "32", "--flow.t_end", "1", "--samples", "2", "--mu.restarts", "2"]) == 0
    json.loads(capsys.readouterr().out)


def test_tubes_and_bounds_commands(capsys):
    assert main(["tubes", "--grid.n", "32", "--flow.t_end", "0.5", "--tubes.mc_samples", "2000"]) == 0
    json.loads(capsys.readouterr().out)
    assert main(["perelman-bounds", "--grid.n", "32", "--flow.t_end", "1"]) == 0
    json.loads(capsys.readouterr().out)


def test_console_script_selftest():
    proc = subprocess.run([sys.executable, "-m", "sasakiflow.cli", "selftest", "--grid.n", "32"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    report = json.loads(proc.stdout)
    assert all(item["passed"] for item in report.values())
