"""CSV/JSON readers and writers for signals, spectra, spike trains and summaries."""
import json
import logging
import math
import os

import numpy as np
import pandas as pd

from errors import SchemaError
from frft_core import ComplexSignal, FrftSpectrum, as_angle

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SIGNAL_COLUMNS = ["index", "t", "re", "im"]
SPECTRUM_COLUMNS = ["index", "u", "re", "im", "t"]
FORMATS = ("csv", "json")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_frame(frame, path, fmt):
    _ensure_parent(path)
    if fmt == "csv":
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    elif fmt == "json":
        # json emits the shortest repr that round-trips binary64
        payload = {column: frame[column].tolist() for column in frame.columns}
        with open(path, "w", encoding="utf-8", newline="\n") as file:
            json.dump(payload, file, indent=2)
            file.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}, expected one of {FORMATS}")
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def _read_frame(path, columns):
    try:
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as file:
                frame = pd.DataFrame(json.load(file))
        else:
            frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise SchemaError(f"❌ input file not found: {path}") from exc
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise SchemaError(f"❌ cannot parse {path}: {exc}") from exc

    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise SchemaError(f"❌ {path} is missing columns {missing}; expected header {','.join(columns)}")
    if frame.empty:
        raise SchemaError(f"❌ {path} has no rows")
    frame = frame[columns]
    try:
        frame = frame.astype(float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"❌ {path} has non-numeric values: {exc}") from exc
    if frame.isna().any().any() or not np.all(np.isfinite(frame.to_numpy())):
        raise SchemaError(f"❌ {path} has missing or non-finite values (truncated file?)")
    if not np.array_equal(frame["index"].to_numpy(), np.arange(len(frame))):
        raise SchemaError(f"❌ {path} index column must run 0..{len(frame) - 1}")
    return frame


def _uniform_step(values, path, column):
    if values.size < 2:
        return None
    steps = np.diff(values)
    step = float(values[-1] - values[0]) / (values.size - 1)
    if step <= 0 or not np.allclose(steps, step, rtol=1e-9, atol=1e-12 * max(1.0, abs(step))):
        raise SchemaError(f"❌ {path} column {column} is not uniformly increasing")
    return step


# -------------------- Signals -------------------- #

def signal_frame(signal):
    samples = signal.samples
    return pd.DataFrame({
        "index": np.arange(signal.length),
        "t": signal.times,
        "re": samples.real,
        "im": samples.imag,
    })


def write_signal(signal, path, fmt="csv"):
    return _write_frame(signal_frame(signal), path, fmt)


def read_signal(path, sample_period=None, sigma=None):
    """Read an ``index,t,re,im`` table; T comes from the t column unless given."""
    frame = _read_frame(path, SIGNAL_COLUMNS)
    times = frame["t"].to_numpy()
    step = _uniform_step(times, path, "t")
    if sample_period is None:
        sample_period = step if step is not None else (sigma if sigma else 1.0)
    samples = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    return ComplexSignal(samples, sample_period, sigma, float(times[0]))


# -------------------- Spectra -------------------- #

def write_spectrum(spectrum, path, fmt="csv"):
    frame = pd.DataFrame({
        "index": np.arange(spectrum.length),
        "u": spectrum.frequencies,
        "re": spectrum.coeffs.real,
        "im": spectrum.coeffs.imag,
        "t": spectrum.start + np.arange(spectrum.length) * spectrum.sample_period,
    })
    return _write_frame(frame, path, fmt)


def read_spectrum(path, alpha):
    """Rebuild a spectrum written by :func:`write_spectrum`; ū₀ is recomputed from α, N and T."""
    frame = _read_frame(path, SPECTRUM_COLUMNS)
    angle = as_angle(alpha)
    times = frame["t"].to_numpy()
    sample_period = _uniform_step(times, path, "t") or 1.0
    length = len(frame)
    freq_step = 0.0 if angle.is_degenerate else 2.0 * math.pi * math.sin(angle.alpha) / (length * sample_period)
    coeffs = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    return FrftSpectrum(coeffs, angle, freq_step, sample_period, float(times[0]))


# -------------------- Spikes and summaries -------------------- #

def spikes_payload(spikes, threshold):
    return {
        "lambda": threshold,
        "spikes": [
            {"k": int(k), "t": float(t), "c_re": float(c.real), "c_im": float(c.imag)}
            for k, t, c in zip(spikes.instants, spikes.times, spikes.weights)
        ],
    }


def write_json(payload, path):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        json.dump(payload, file, indent=2, sort_keys=True, allow_nan=True)
        file.write("\n")
    return path


def write_spikes(spikes, threshold, path):
    return write_json(spikes_payload(spikes, threshold), path)


def write_table(frame, path):
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path
