import base64
import json
import logging
import math

import pytest

import load_config
from errors import ConfigError
from frft_core import bandwidth_index
from load_config import configure_logging, parse_run_config


def test_defaults():
    config = parse_run_config({})
    assert config.alpha == pytest.approx(math.pi / 4)
    assert config.bandwidth_index == load_config.DEFAULT_BANDWIDTH_INDEX
    assert config.fold_budget is None
    assert config.offset_anchor == "mean"
    assert config.output_format == "csv"
    assert config.sweep.fold_budgets == [None]
    assert config.sweep.alphas == [config.alpha]
    assert config.sweep.bandwidth_indices == [config.bandwidth_index]


def test_overrides_skip_none():
    config = parse_run_config({"SEED": 3})
    changed = config.with_overrides(seed=None, jobs=4, output_dir="elsewhere")
    assert changed.seed == 3
    assert changed.jobs == 4
    assert changed.output_dir == "elsewhere"


@pytest.mark.parametrize("raw, key", [
    ({"THRESHOLDS": 1.0}, "THRESHOLDS"),
    ({"THRESHOLD": 0}, "THRESHOLD"),
    ({"THRESHOLD": "1"}, "THRESHOLD"),
    ({"NUM_SAMPLES": True}, "NUM_SAMPLES"),
    ({"NUM_SAMPLES": 1}, "NUM_SAMPLES"),
    ({"FOLD_BUDGET": -1}, "FOLD_BUDGET"),
    ({"FOLD_BUDGET": "many"}, "FOLD_BUDGET"),
    ({"OUTPUT_FORMAT": "xml"}, "OUTPUT_FORMAT"),
    ({"OFFSET_ANCHOR": "median"}, "OFFSET_ANCHOR"),
    ({"OFFSET_ANCHOR": "band"}, "OFFSET_ANCHOR"),
    ({"BANDWIDTH_INDEX": 2, "OMEGA_ALPHA": 3.0}, "OMEGA_ALPHA"),
    ({"BANDWIDTH_INDEX": 1.5}, "BANDWIDTH_INDEX"),
    ({"SWEEP": {"TRIAL": 2}}, "TRIAL"),
    ({"SWEEP": {"NUM_SAMPLES": []}}, "SWEEP.NUM_SAMPLES"),
    ({"SWEEP": {"AMPLITUDE_SCALES": [1.0, -2.0]}}, "SWEEP.AMPLITUDE_SCALES"),
    ({"SWEEP": {"FOLD_BUDGETS": ["all"]}}, "SWEEP.FOLD_BUDGETS"),
    ({"SWEEP": {"TRIALS": 0}}, "SWEEP.TRIALS"),
])
def test_invalid_values_name_their_key(raw, key):
    with pytest.raises(ConfigError) as info:
        parse_run_config(raw)
    assert info.value.key == key
    assert info.value.exit_code == 2


def test_omega_alpha_sets_the_bandwidth_index():
    omega = 2.0 * math.pi * math.sin(math.pi / 4) * 3
    assert parse_run_config({"OMEGA_ALPHA": omega}).bandwidth_index == 3
    config = parse_run_config({"OMEGA_ALPHA": omega * 1.01, "ALPHA": 1.1})
    assert config.bandwidth_index == bandwidth_index(omega * 1.01, 1.1, 1.0)


def test_first_sample_anchor_is_accepted():
    assert parse_run_config({"OFFSET_ANCHOR": "first"}).offset_anchor == "first"


def test_sweep_budgets_mix_realized_and_integers():
    sweep = parse_run_config({"SWEEP": {"FOLD_BUDGETS": ["realized", 4], "ALPHAS": [0.5, 1.0]}}).sweep
    assert sweep.fold_budgets == [None, 4]
    assert sweep.alphas == [0.5, 1.0]


def test_load_explicit_file(write_config):
    assert load_config.load_config(write_config(SEED=9)) == {"SEED": 9}


def test_load_from_environment(monkeypatch):
    encoded = base64.b64encode(json.dumps({"THRESHOLD": 2.0}).encode("utf-8")).decode("ascii")
    monkeypatch.setenv(load_config.CONFIG_ENV_VAR, encoded)
    assert load_config.load_config() == {"THRESHOLD": 2.0}


def test_no_config_gives_defaults():
    assert load_config.load_config() == {}


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_malformed_files(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config.load_config(str(path))


def test_missing_explicit_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config.load_config(str(tmp_path / "nope.json"))


def test_bad_base64(monkeypatch):
    monkeypatch.setenv(load_config.CONFIG_ENV_VAR, "***")
    with pytest.raises(ConfigError):
        load_config.load_config()


def test_configure_logging(monkeypatch):
    monkeypatch.setenv(load_config.LOG_ENV_VAR, "debug")
    assert configure_logging() == logging.DEBUG
    assert configure_logging("bogus") == logging.WARNING
    configure_logging("WARNING")
