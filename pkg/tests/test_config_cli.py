from __future__ import annotations

import pytest

from fraclap import cli
from fraclap.config import ConfigError, DtnConfig, parse_config

QUICK = """
[run]
experiments = dtn, jets
seed = 11

[dtn]
gamma = 0.25
kmag = 1, 2
nodes = 256, 512, 1024
rtol = 1e-2

[jets]
gamma = 0.3
samples = 2
"""


def test_minimal_dtn_with_half():
    cfg = parse_config("[run]\nexperiments = dtn\n[dtn]\ngamma = 0.5\n")
    assert cfg.section("dtn").gamma == (0.5,)
    assert cfg.experiments == ("dtn",)


def test_defaults_fill_missing_sections():
    cfg = parse_config("[run]\nexperiments = dtn\n")
    assert cfg.section("dtn") == DtnConfig()


def test_gamma_beyond_half_dimension_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config("[iterated]\ngamma = 2.5\nn = 3\n")
    assert any("n/2" in p for p in info.value.problems)


def test_duplicate_key_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[dtn]\ngamma = 0.1\ngamma = 0.2\n")
    assert "line 3" in info.value.problems[0]


def test_all_problems_collected():
    text = "[run]\nexperiments = dtn, bogus\n[dtn]\ngama = 0.1\nrtol = -1\n[extra]\nx = 1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    joined = "\n".join(info.value.problems)
    for needle in ("bogus", "'gama'", "rtol", "[extra]"):
        assert needle in joined


def test_bad_number():
    with pytest.raises(ConfigError):
        parse_config("[dtn]\nnodes = many\n")


def test_list_experiments(capsys):
    assert cli.main(["--list-experiments"]) == 0
    assert "iterated" in capsys.readouterr().out


def test_empty_run_writes_nothing(tmp_path):
    ini = tmp_path / "empty.ini"
    ini.write_text("[run]\nexperiments =\n")
    out = tmp_path / "out"
    assert cli.main(["--config", str(ini), "--out", str(out)]) == 0
    assert not out.exists()


def test_invalid_config_exit_code(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[dtn]\ngamma = 0.1\ngamma = 0.2\n")
    assert cli.main(["--config", str(ini)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_seed_range():
    with pytest.raises(SystemExit):
        cli.main(["--config", "x.ini", "--seed", "-1"])


def test_run_is_reproducible(tmp_path):
    ini = tmp_path / "quick.ini"
    ini.write_text(QUICK)
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(["--config", str(ini), "--out", str(out)]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]
    assert set(outputs[0]) == {"dtn.csv", "checks.csv", "summary.txt"}
    lines = outputs[0]["dtn.csv"].decode().splitlines()
    assert lines[0] == "# fraclap-convergence v1" and len(lines) == 2 + 6
    assert b"seed=11" in outputs[0]["summary.txt"]


def test_seed_changes_random_checks_only(tmp_path):
    ini = tmp_path / "quick.ini"
    ini.write_text(QUICK)
    for seed in ("1", "2"):
        assert cli.main(["--config", str(ini), "--out", str(tmp_path / seed), "--seed", seed]) == 0
    a = (tmp_path / "1" / "dtn.csv").read_bytes()
    b = (tmp_path / "2" / "dtn.csv").read_bytes()
    assert a == b


def test_failing_check_sets_exit_status(tmp_path):
    ini = tmp_path / "strict.ini"
    ini.write_text("[run]\nexperiments = dtn\n[dtn]\ngamma = 0.25\nkmag = 1\n"
                   "nodes = 64, 128, 256\nrtol = 1e-12\n")
    assert cli.main(["--config", str(ini), "--out", str(tmp_path / "o")]) == 1
    assert "FAIL" in (tmp_path / "o" / "summary.txt").read_text()
