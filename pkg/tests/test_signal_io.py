import json
import math

import numpy as np
import pytest

from errors import SchemaError
from frft_core import ComplexSignal, dtfrft
from signal_io import read_signal, read_spectrum, write_signal, write_spectrum, write_spikes, write_table
from spectral_estimation import SpikeTrain


@pytest.fixture
def signal(rng):
    samples = rng.normal(size=12) + 1j * rng.normal(size=12)
    return ComplexSignal(samples, 1.0 / 12, 1.0, -0.5)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_signal_round_trip_is_lossless(signal, tmp_path, fmt):
    path = write_signal(signal, str(tmp_path / f"signal.{fmt}"), fmt)
    restored = read_signal(path, sigma=1.0)
    np.testing.assert_array_equal(restored.samples, signal.samples)
    assert restored.start == signal.start
    assert restored.sample_period == pytest.approx(signal.sample_period, rel=1e-12)


def test_signal_csv_header(signal, tmp_path):
    path = write_signal(signal, str(tmp_path / "signal.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "index,t,re,im"
    assert len(lines) == signal.length + 1


def test_missing_file_is_schema_error(tmp_path):
    with pytest.raises(SchemaError):
        read_signal(str(tmp_path / "absent.csv"))


def test_missing_column_is_schema_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("index,t,re\n0,0,1\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_signal(str(path))


def test_truncated_row_is_schema_error(signal, tmp_path):
    path = write_signal(signal, str(tmp_path / "signal.csv"))
    lines = open(path, encoding="utf-8").read().splitlines()
    truncated = tmp_path / "truncated.csv"
    truncated.write_text("\n".join(lines[:6] + [lines[6][:4]]) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_signal(str(truncated))


def test_non_uniform_time_is_schema_error(tmp_path):
    path = tmp_path / "jitter.csv"
    path.write_text("index,t,re,im\n0,0,1,0\n1,0.1,1,0\n2,0.3,1,0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_signal(str(path))


def test_index_must_count_rows(tmp_path):
    path = tmp_path / "index.csv"
    path.write_text("index,t,re,im\n0,0,1,0\n2,0.1,1,0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_signal(str(path))


def test_spectrum_round_trip(signal, tmp_path):
    spectrum = dtfrft(signal, 0.7)
    path = write_spectrum(spectrum, str(tmp_path / "spectrum.csv"))
    assert open(path, encoding="utf-8").readline().strip() == "index,u,re,im,t"
    restored = read_spectrum(path, 0.7)
    np.testing.assert_array_equal(restored.coeffs, spectrum.coeffs)
    assert restored.freq_step == pytest.approx(2.0 * math.pi * math.sin(0.7), rel=1e-12)
    assert restored.start == signal.start


def test_spike_json_schema(tmp_path):
    spikes = SpikeTrain([2, 5], [2.0 - 4j, -2.0], sample_period=0.1)
    payload = json.loads(open(write_spikes(spikes, 1.0, str(tmp_path / "spikes.json")), encoding="utf-8").read())
    assert payload["lambda"] == 1.0
    assert payload["spikes"][0] == {"k": 2, "t": pytest.approx(0.2), "c_re": 2.0, "c_im": -4.0}
    assert len(payload["spikes"]) == 2


def test_write_table(tmp_path):
    import pandas as pd

    path = write_table(pd.DataFrame({"x": [1, 2], "y": [0.5, 0.25]}), str(tmp_path / "nested" / "table.csv"))
    assert open(path, encoding="utf-8").read() == "x,y\n1,0.5\n2,0.25\n"
