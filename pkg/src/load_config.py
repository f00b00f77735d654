import base64
import binascii
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from errors import ConfigError
from frft_core import bandwidth_index as compute_bandwidth_index

CONFIG_FILE = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "config", "config.json"))
CONFIG_ENV_VAR = "MODFRFT_CONFIG_DATA"
LOG_ENV_VAR = "MODFRFT_LOG"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

DEFAULTS = {
    "ALPHA": math.pi / 4,
    "SIGMA": 1.0,
    "BANDWIDTH_INDEX": None,
    "OMEGA_ALPHA": None,
    "THRESHOLD": 1.0,
    "NUM_SAMPLES": 64,
    "FOLD_BUDGET": "auto",
    "AMPLITUDE_SCALE": 3.0,
    "SEED": 0,
    "OUTPUT_DIR": "output",
    "OUTPUT_FORMAT": "csv",
    "JOBS": 1,
    "OFFSET_ANCHOR": "mean",
    "DENSE_FACTOR": 1,
    "RMSE_TOLERANCE": 1e-6,
    "ANNIHILATION_REGULARIZATION": 0.0,
    "SWEEP": None,
}

SWEEP_DEFAULTS = {
    "AMPLITUDE_SCALES": [0.5, 1.5, 3.0],
    "NUM_SAMPLES": [32, 48, 64],
    "FOLD_BUDGETS": ["realized"],
    "ALPHAS": None,
    "BANDWIDTH_INDICES": None,
    "TRIALS": 4,
}

DEFAULT_BANDWIDTH_INDEX = 2


def configure_logging(level=None):
    """Set the root logger from MODFRFT_LOG (DEBUG, INFO, WARNING, ERROR); WARNING by default."""
    name = (level or os.getenv(LOG_ENV_VAR) or "WARNING").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)
    return numeric


def load_config(path=None):
    """Load the JSON config and return it as a dictionary.

    Order: explicit path, then base64 JSON in MODFRFT_CONFIG_DATA, then config/config.json.
    An empty dict is returned when none of them exists.
    """
    env_data = os.getenv(CONFIG_ENV_VAR)
    try:
        if path:
            with open(path, "r", encoding="utf-8") as file:
                config = json.load(file)
            logging.info("✅ Loaded config from %s", path)
        elif env_data:
            decoded_config = base64.b64decode(env_data, validate=True).decode("utf-8")
            config = json.loads(decoded_config)
            logging.info("✅ Loaded config from environment variable")
        elif os.path.exists(CONFIG_FILE):
            with open(CONFIG_FILE, "r", encoding="utf-8") as file:
                config = json.load(file)
            logging.info("✅ Loaded config from %s", CONFIG_FILE)
        else:
            logging.warning("⚠️ No configuration found, using defaults")
            config = {}
    except FileNotFoundError as exc:
        raise ConfigError(f"❌ Missing configuration file: {path}") from exc
    except (binascii.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"❌ {CONFIG_ENV_VAR} is not valid base64: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"❌ Invalid JSON format in configuration: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("❌ configuration must be a JSON object")
    return config


# -------------------- Validation -------------------- #

def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _number(config, key, positive=False, minimum=None):
    value = config[key]
    if not _is_number(value):
        raise ConfigError(f"❌ {key} must be a finite number, got {value!r}", key=key)
    if positive and not value > 0:
        raise ConfigError(f"❌ {key} must be positive, got {value!r}", key=key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"❌ {key} must be ≥ {minimum}, got {value!r}", key=key)
    return float(value)


def _integer(config, key, minimum):
    value = config[key]
    if not _is_int(value) or value < minimum:
        raise ConfigError(f"❌ {key} must be an integer ≥ {minimum}, got {value!r}", key=key)
    return value


def _choice(config, key, choices):
    value = config[key]
    if value not in choices:
        raise ConfigError(f"❌ {key} must be one of {list(choices)}, got {value!r}", key=key)
    return value


def _reject_unknown(config, known, scope):
    unknown = sorted(set(config) - set(known))
    if unknown:
        raise ConfigError(f"❌ unknown {scope} key {unknown[0]!r}", key=unknown[0])


def _number_list(values, key, positive=False, integer=False, minimum=None):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"❌ SWEEP.{key} must be a non-empty list", key=f"SWEEP.{key}")
    for value in values:
        valid = _is_int(value) if integer else _is_number(value)
        if not valid or (positive and not value > 0) or (minimum is not None and value < minimum):
            raise ConfigError(f"❌ SWEEP.{key} has invalid entry {value!r}", key=f"SWEEP.{key}")
    return list(values)


@dataclass(frozen=True)
class SweepConfig:
    amplitude_scales: list
    num_samples: list
    fold_budgets: list
    alphas: list
    bandwidth_indices: list
    trials: int


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    sigma: float
    bandwidth_index: int
    threshold: float
    num_samples: int
    fold_budget: Optional[int]
    amplitude_scale: float
    seed: int
    output_dir: str
    output_format: str
    jobs: int
    offset_anchor: str
    dense_factor: int
    rmse_tolerance: float
    regularization: float
    sweep: SweepConfig = field(default=None)

    def with_overrides(self, **overrides):
        values = {key: value for key, value in overrides.items() if value is not None}
        return RunConfig(**{**self.__dict__, **values})


def _bandwidth_index(config, alpha, sigma):
    if config["BANDWIDTH_INDEX"] is not None and config["OMEGA_ALPHA"] is not None:
        raise ConfigError("❌ give either BANDWIDTH_INDEX or OMEGA_ALPHA, not both", key="OMEGA_ALPHA")
    if config["OMEGA_ALPHA"] is not None:
        omega = _number(config, "OMEGA_ALPHA", minimum=0)
        if abs(math.sin(alpha)) < 1e-12:
            raise ConfigError("❌ OMEGA_ALPHA needs a non-degenerate ALPHA", key="ALPHA")
        return compute_bandwidth_index(omega, alpha, sigma)
    if config["BANDWIDTH_INDEX"] is None:
        return DEFAULT_BANDWIDTH_INDEX
    return _integer(config, "BANDWIDTH_INDEX", 0)


def _sweep_config(raw, alpha, bandwidth):
    raw = dict(raw or {})
    _reject_unknown(raw, SWEEP_DEFAULTS, "SWEEP")
    sweep = {**SWEEP_DEFAULTS, **raw}
    budgets = sweep["FOLD_BUDGETS"]
    if not isinstance(budgets, list) or not budgets:
        raise ConfigError("❌ SWEEP.FOLD_BUDGETS must be a non-empty list", key="SWEEP.FOLD_BUDGETS")
    for budget in budgets:
        if budget != "realized" and not (_is_int(budget) and budget >= 0):
            raise ConfigError(f"❌ SWEEP.FOLD_BUDGETS has invalid entry {budget!r}", key="SWEEP.FOLD_BUDGETS")
    trials = sweep["TRIALS"]
    if not _is_int(trials) or trials < 1:
        raise ConfigError(f"❌ SWEEP.TRIALS must be an integer ≥ 1, got {trials!r}", key="SWEEP.TRIALS")
    return SweepConfig(
        amplitude_scales=_number_list(sweep["AMPLITUDE_SCALES"], "AMPLITUDE_SCALES", positive=True),
        num_samples=_number_list(sweep["NUM_SAMPLES"], "NUM_SAMPLES", integer=True, minimum=2),
        fold_budgets=[None if budget == "realized" else budget for budget in budgets],
        alphas=_number_list(sweep["ALPHAS"] if sweep["ALPHAS"] is not None else [alpha], "ALPHAS"),
        bandwidth_indices=_number_list(
            sweep["BANDWIDTH_INDICES"] if sweep["BANDWIDTH_INDICES"] is not None else [bandwidth],
            "BANDWIDTH_INDICES", integer=True, minimum=0,
        ),
        trials=trials,
    )


def parse_run_config(raw):
    """Validate a raw config dictionary against DEFAULTS and return a RunConfig."""
    _reject_unknown(raw, DEFAULTS, "config")
    config = {**DEFAULTS, **raw}

    alpha = _number(config, "ALPHA")
    sigma = _number(config, "SIGMA", positive=True)
    fold_budget = config["FOLD_BUDGET"]
    if fold_budget == "auto":
        fold_budget = None
    elif not (_is_int(fold_budget) and fold_budget >= 0):
        raise ConfigError(f"❌ FOLD_BUDGET must be \"auto\" or an integer ≥ 0, got {fold_budget!r}", key="FOLD_BUDGET")
    if not isinstance(config["OUTPUT_DIR"], str) or not config["OUTPUT_DIR"]:
        raise ConfigError("❌ OUTPUT_DIR must be a non-empty string", key="OUTPUT_DIR")
    bandwidth = _bandwidth_index(config, alpha, sigma)

    return RunConfig(
        alpha=alpha,
        sigma=sigma,
        bandwidth_index=bandwidth,
        threshold=_number(config, "THRESHOLD", positive=True),
        num_samples=_integer(config, "NUM_SAMPLES", 2),
        fold_budget=fold_budget,
        amplitude_scale=_number(config, "AMPLITUDE_SCALE", positive=True),
        seed=_integer(config, "SEED", 0),
        output_dir=config["OUTPUT_DIR"],
        output_format=_choice(config, "OUTPUT_FORMAT", ("csv", "json")),
        jobs=_integer(config, "JOBS", 1),
        offset_anchor=_choice(config, "OFFSET_ANCHOR", ("mean", "first")),
        dense_factor=_integer(config, "DENSE_FACTOR", 1),
        rmse_tolerance=_number(config, "RMSE_TOLERANCE", positive=True),
        regularization=_number(config, "ANNIHILATION_REGULARIZATION", minimum=0),
        sweep=_sweep_config(config["SWEEP"], alpha, bandwidth),
    )


if __name__ == "__main__":
    configure_logging()
    print(parse_run_config(load_config()))
