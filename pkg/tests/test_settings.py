import json
import logging

import pytest

from utils import app_config
from utils.errors import UsageError
from utils.settings import (
    DEFAULT_SETTINGS,
    load_settings,
    merge_settings,
    parse_antennas,
    validate_settings,
)
from utils.text import curve_slug, format_float, format_snr_db, slugify


def test_defaults_are_valid():
    settings = load_settings()
    assert settings["evaluators"] == ["series", "quadrature"]
    assert settings["series_terms"] == 40
    assert settings["snr_start"] == 0.0


def test_load_settings_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"kappa": 2, "trials": "5000", "evaluators": "quadrature, mc_model"}), encoding="utf-8")
    settings = load_settings(path)
    assert settings["kappa"] == 2.0
    assert settings["trials"] == 5000
    assert settings["evaluators"] == ["quadrature", "mc_model"]
    assert settings["mu"] == DEFAULT_SETTINGS["mu"]


@pytest.mark.parametrize(
    "content",
    ['{"kappa": 1, "colour": "red"}', "not json", "[1, 2]", '{"trials": 1.5}', '{"evaluators": "series,bogus"}'],
)
def test_bad_config_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(UsageError):
        load_settings(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(UsageError):
        load_settings(tmp_path / "absent.json")


@pytest.mark.parametrize(
    "overrides",
    [{"snr_step": 0}, {"snr_start": 10, "snr_stop": 5}, {"trials": 0}, {"partitions": 0}, {"evaluators": []}],
)
def test_validate_rejects(overrides):
    with pytest.raises(UsageError):
        validate_settings(merge_settings(DEFAULT_SETTINGS, overrides))


def test_merge_ignores_none():
    merged = merge_settings({"kappa": 1.0, "mu": 2.0}, {"kappa": None, "mu": 3.0})
    assert merged == {"kappa": 1.0, "mu": 3.0}


def test_parse_antennas():
    assert parse_antennas("2x1x2") == (2, 1, 2)
    assert parse_antennas("1×1×1") == (1, 1, 1)
    for bad in ("2x1", "0x1x1", "axbxc", ""):
        with pytest.raises(UsageError):
            parse_antennas(bad)


def test_n_jobs_from_environment(monkeypatch):
    monkeypatch.delenv("SDF_SER_JOBS", raising=False)
    assert app_config.get_n_jobs() == 1
    monkeypatch.setenv("SDF_SER_JOBS", "4")
    assert app_config.get_n_jobs() == 4
    monkeypatch.setenv("SDF_SER_JOBS", "-1")
    assert app_config.get_n_jobs() == -1
    for raw in ("0", "-3", "many"):
        monkeypatch.setenv("SDF_SER_JOBS", raw)
        assert app_config.get_n_jobs() == 1


def test_log_level(monkeypatch):
    monkeypatch.delenv("SDF_SER_LOG_LEVEL", raising=False)
    assert app_config.get_log_level() == logging.WARNING
    assert app_config.get_log_level(1) == logging.INFO
    assert app_config.get_log_level(3) == logging.DEBUG
    monkeypatch.setenv("SDF_SER_LOG_LEVEL", "error")
    assert app_config.get_log_level() == logging.ERROR
    monkeypatch.setenv("SDF_SER_LOG_LEVEL", "chatty")
    assert app_config.get_log_level() == logging.WARNING


def test_config_path(monkeypatch):
    monkeypatch.delenv("SDF_SER_CONFIG", raising=False)
    assert app_config.get_config_path() is None
    monkeypatch.setenv("SDF_SER_CONFIG", " run.json ")
    assert app_config.get_config_path() == "run.json"


def test_text_helpers():
    assert format_float(None) == ""
    assert format_float(0.1 + 0.2) == "0.3"
    assert format_snr_db(15.000000000001) == "15"
    assert format_snr_db(2.5) == "2.5"
    assert format_snr_db(-0.0) == "0"
    assert slugify("kappa=0.5,mu=1") == "kappa_0p5_mu_1"
    assert slugify("κ=2") == "kappa_2"
    assert curve_slug("fig1", "kappa=1") == "fig1__kappa_1"
