import pytest

from rbg_hubs.config import (
    DEFAULT_EDGE_EPSILON,
    build_config,
    default_workers,
    edge_epsilon,
    load_config_file,
    parse_fix,
    parse_grid,
)
from rbg_hubs.errors import ConfigError


def test_parse_grid_forms():
    assert parse_grid("1:2:3") == [1.0, 1.5, 2.0]
    assert parse_grid(" 0.5, 1 ,2") == [0.5, 1.0, 2.0]
    with pytest.raises(ConfigError):
        parse_grid("1:2:1")
    with pytest.raises(ConfigError):
        parse_grid("a,b")


def test_parse_fix():
    assert parse_fix("mu=3") == ("mu", 3.0)
    assert parse_fix("lam = 0.5") == ("lambda", 0.5)
    with pytest.raises(ConfigError):
        parse_fix("nu=1")


def test_env_defaults(monkeypatch):
    assert default_workers() == 1 and edge_epsilon() == DEFAULT_EDGE_EPSILON
    monkeypatch.setenv("RBG_HUBS_WORKERS", "4")
    monkeypatch.setenv("RBG_HUBS_EDGE_EPSILON", "1e-6")
    assert default_workers() == 4 and edge_epsilon() == 1e-6
    monkeypatch.setenv("RBG_HUBS_WORKERS", "many")
    monkeypatch.setenv("RBG_HUBS_EDGE_EPSILON", "2")
    assert default_workers() == 1 and edge_epsilon() == DEFAULT_EDGE_EPSILON
    cfg = build_config(subcommand="theory", lam=1.0, mu=1.0)
    assert cfg.workers == 1


def test_config_file(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("conn = exp:0.1  # infinite support\n\n--fraction-threshold = 0.4\n")
    assert load_config_file(path) == {"conn": "exp:0.1", "fraction_threshold": "0.4"}
    path.write_text("no separator\n")
    with pytest.raises(ConfigError):
        load_config_file(path)


def test_file_lambda_loses_to_override():
    cfg = build_config({"lambda": "2", "mu": "1"}, subcommand="theory", lam=5.0)
    assert cfg.lam == 5.0 and cfg.mu == 1.0


@pytest.mark.parametrize(
    "values",
    [
        {"subcommand": "degrees", "lam": 1.0, "mu": 1.0},
        {"subcommand": "theory", "lam": 1.0},
        {"subcommand": "theory", "lam": -1.0, "mu": 1.0},
        {"subcommand": "theory", "lam": 1.0, "mu": 1.0, "conn": "boolean:-1"},
        {"subcommand": "percolate", "seed": 1, "fix": "mu=1", "grid": "1,2", "L_list": "8"},
        {"subcommand": "percolate", "seed": 1, "fix": "mu=1", "grid": "2,1", "L_list": "4,8"},
        {"subcommand": "percolate", "seed": 1, "grid": "1,2", "L_list": "4,8"},
        {"subcommand": "zeta", "seed": 1, "L_list": "8,4"},
        {"subcommand": "figs", "seed": 1},
        {"subcommand": "figs", "seed": 1, "figure": "fig2", "p_grid": "0,0.5"},
        {"subcommand": "theory", "lam": 1.0, "mu": 1.0, "criterion": "cluster"},
    ],
)
def test_invalid_configs(values):
    with pytest.raises(ConfigError):
        build_config(**values)


def test_valid_sweep_config():
    cfg = build_config(subcommand="zeta", seed=3, L_list="8,16,32", conn="pboolean:0.5:0.3@p=0.25")
    assert cfg.L_list == [8.0, 16.0, 32.0] and cfg.grid is None
    assert cfg.criterion == "wrap" and cfg.fraction_threshold == 0.3


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="lamda"):
        build_config({"lamda": "5", "mu": "1"}, subcommand="theory", lam=1.0)
