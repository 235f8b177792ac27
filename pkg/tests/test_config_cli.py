from pathlib import Path

import pytest

from ahtlab.cli import main
from ahtlab.config import ExperimentConfig, dump_config, load_config, parse_config
from ahtlab.errors import ConfigError
from ahtlab.reports import fmt, read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    again = parse_config(dump_config(cfg), cfg.name)
    assert again == cfg


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert parse_config(dump_config(cfg), cfg.name) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("[domain]\nkind = torus\nsmoothness = 3\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse_config("[plotting]\ncolour = red\n")


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        parse_config("[initial]\npreset = vortex\n")


def test_bad_number_rejected():
    with pytest.raises(ConfigError):
        parse_config("[run]\nT = soon\n")


def test_seed_override():
    cfg = ExperimentConfig().with_seed(11)
    assert cfg.initial.seed == 11


def test_float_cells_round_trip():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(True) == "1"
    assert fmt(None) == ""


def test_project_command_writes_reports(tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text("[domain]\nkind = disk\nresolution = 16, 32\n\n[initial]\npreset = random_smooth\nseed = 2\n\n[constants]\ntrials = 10\n")
    rc = main(["project", "--config", str(cfg), "--out", str(tmp_path / "out"), "--quiet"])
    assert rc == 0
    cols, rows = read_csv(tmp_path / "out" / "project_project.csv")
    assert cols[:2] == ["resolution_1", "resolution_2"]
    assert len(rows) == 2
    assert (tmp_path / "out" / "project.json").exists()
    assert (tmp_path / "out" / "project.meta.json").exists()


def test_seed_flag_changes_output(tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("[domain]\nkind = torus\nresolution = 16, 16\n")
    main(["project", "--config", str(cfg), "--out", str(tmp_path / "a"), "--quiet", "--seed", "1"])
    main(["project", "--config", str(cfg), "--out", str(tmp_path / "b"), "--quiet", "--seed", "2"])
    a = (tmp_path / "a" / "project_project.csv").read_bytes()
    b = (tmp_path / "b" / "project_project.csv").read_bytes()
    assert a != b


def test_library_errors_give_exit_code_two(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[domain]\nkind = torus\nresolution = 15, 16\n")
    assert main(["project", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "InvalidResolution" in capsys.readouterr().err


def test_readme_example_gives_defaults():
    text = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    block = text.split("```ini\n", 1)[1].split("```", 1)[0]
    assert parse_config(block) == ExperimentConfig()
