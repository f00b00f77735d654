import json
import math

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")

QUARTER_TURN = math.pi / 4


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    """Factory writing a JSON config next to the test's outputs."""
    def _write(name="config.json", **keys):
        path = tmp_path / name
        path.write_text(json.dumps(keys), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    """Keep a developer's config/config.json and MODFRFT_* variables out of the tests."""
    import load_config

    monkeypatch.delenv("MODFRFT_CONFIG_DATA", raising=False)
    monkeypatch.delenv("MODFRFT_LOG", raising=False)
    monkeypatch.setattr(load_config, "CONFIG_FILE", str(tmp_path / "missing" / "config.json"))
