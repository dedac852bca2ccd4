# tests/test_config.py

import pytest

from core.config import (
    CONFIG_ENV_VAR,
    RunConfig,
    config_from_manifest,
    config_from_mapping,
    load_config,
    parse_tau_grid,
)
from core.errors import ConfigError


def _write(tmp_path, text):
    path = tmp_path / "run.env"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults_without_file(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    config = load_config()
    assert config == RunConfig()
    assert config.tau_grid == (20, 40, 60, 80, 100)


def test_file_values_are_parsed(tmp_path, fixtures_dir):
    path = _write(tmp_path, "\n".join([
        "# comentario",
        f"DATA_DIR={fixtures_dir}",
        "SEED=7",
        "TAU_GRID=100, 50,12.5,50",
        "DGP=tt,mis_irr",
        "NOMINAL_DF=sí",
        "N_OWN_DRAWS=",
        "TERMS=quality,distance",
    ]))
    config = load_config(path)
    assert config.seed == 7
    assert config.tau_grid == (12.5, 50, 100)
    assert config.dgp == ("TT", "MIS_IRR")
    assert config.nominal_df is True
    assert config.n_own_draws is None
    assert config.terms == ("quality", "distance")


def test_environment_variable_points_to_file(tmp_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, _write(tmp_path, "N_DRAWS=33\n"))
    assert load_config().n_draws == 33


@pytest.mark.parametrize("text", [
    "UNKNOWN_KEY=1",
    "SEED=abc",
    "TAU_GRID=120",
    "DGP=OTHER",
    "ALPHA=1.5",
    "GIBBS_N_ITER=10\nGIBBS_BURN_IN=10",
    "THREADS=0",
    "NOMINAL_DF=quizás",
    "DATA_DIR=/no/existe/en/ningun/sitio",
])
def test_invalid_files_raise(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_missing_file_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nada.env"))


def test_hash_is_stable_and_ignores_output_location():
    base = RunConfig()
    assert base.config_hash() == RunConfig().config_hash()
    assert len(base.config_hash()) == 12
    assert base.with_overrides(output_dir="otro", threads=4).config_hash() == base.config_hash()
    assert base.with_overrides(seed=1).config_hash() != base.config_hash()


def test_overrides_skip_none_and_validate():
    base = RunConfig()
    assert base.with_overrides(seed=None, alpha=0.1).alpha == 0.1
    assert base.with_overrides(seed=None).seed == base.seed
    with pytest.raises(ConfigError):
        base.with_overrides(alpha=0.0)


def test_manifest_round_trip():
    config = config_from_mapping({"SEED": "5", "TAU_GRID": "30,100", "CF_ATTRIBUTES": "A"})
    rebuilt = config_from_manifest({"config": config.to_dict()})
    assert rebuilt == config
    assert rebuilt.config_hash() == config.config_hash()
    with pytest.raises(ConfigError):
        config_from_manifest({})
    with pytest.raises(ConfigError):
        config_from_manifest({"config": {"bogus": 1}})


def test_tau_grid_parser():
    assert parse_tau_grid("0,100") == (0, 100)
    with pytest.raises(ConfigError):
        parse_tau_grid("-5")
