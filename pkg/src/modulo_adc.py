import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import (
    InvalidSignalError,
    InvalidThresholdError,
    LengthMismatchError,
    NonFiniteInputError,
    ResidualSnapError,
    SequenceTooShortError,
)
from frft_core import ComplexSignal

logger = logging.getLogger(__name__)

SNAP_TOL = 1e-6
LATTICE_TOL = 1e-9


def _check_threshold(threshold):
    if not (math.isfinite(threshold) and threshold > 0):
        raise InvalidThresholdError(f"❌ ADC threshold λ must be positive and finite, got {threshold}")


@dataclass(frozen=True)
class ModuloParams:
    threshold: float

    def __post_init__(self):
        _check_threshold(self.threshold)

    @property
    def lattice_step(self):
        return 2.0 * self.threshold


def _in_range(values, threshold):
    parts = np.concatenate([values.real, values.imag])
    return bool(np.all((parts >= -threshold) & (parts < threshold)))


@dataclass(frozen=True, eq=False)
class FoldedSamples:
    """h[k] = M_λ(x(kT)) applied to real and imaginary parts."""
    samples: np.ndarray
    params: ModuloParams
    sample_period: float = 1.0
    sigma: float = None
    start: float = 0.0

    def __post_init__(self):
        signal = ComplexSignal(self.samples, self.sample_period, self.sigma, self.start)
        if not _in_range(signal.samples, self.params.threshold):
            raise InvalidSignalError(f"❌ folded samples must lie in [-λ, λ) with λ={self.params.threshold}")
        object.__setattr__(self, "samples", signal.samples)
        object.__setattr__(self, "sample_period", signal.sample_period)
        object.__setattr__(self, "sigma", signal.sigma)
        object.__setattr__(self, "start", signal.start)

    @property
    def length(self):
        return self.samples.size

    @property
    def threshold(self):
        return self.params.threshold

    def as_signal(self):
        return ComplexSignal(self.samples, self.sample_period, self.sigma, self.start)


def _off_lattice(values, step):
    parts = np.concatenate([np.real(values), np.imag(values)]) / step
    return np.abs(parts - np.round(parts))


@dataclass(frozen=True, eq=False)
class ResidualSequence:
    """Piecewise-constant v[k] = x[k] - h[k]; each component lies in 2λℤ."""
    values: np.ndarray
    threshold: float

    def __post_init__(self):
        _check_threshold(self.threshold)
        values = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        step = 2.0 * self.threshold
        if values.size and np.max(_off_lattice(values, step)) * step > LATTICE_TOL * self.threshold:
            raise InvalidSignalError(f"❌ residual components must be multiples of 2λ = {step}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self):
        return self.values.size


# -------------------- Operations -------------------- #

def centered_modulo(g, threshold):
    """M_λ(g) = 2λ([[g/2λ + 1/2]] - 1/2), with [[·]] the fractional part.

    Works elementwise on arrays. Values already in [-λ, λ) are returned as is.
    """
    _check_threshold(threshold)
    g_arr = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g_arr)):
        raise NonFiniteInputError("❌ centered modulo needs finite input")

    step = 2.0 * threshold
    shifted = g_arr / step + 0.5
    frac = shifted - np.floor(shifted)
    frac = np.where(frac >= 1.0, 0.0, frac)
    folded = step * (frac - 0.5)
    folded = np.where(folded >= threshold, folded - step, folded)
    folded = np.where(folded < -threshold, folded + step, folded)
    result = np.where((g_arr >= -threshold) & (g_arr < threshold), g_arr, folded)
    return float(result) if result.ndim == 0 else result


def fold_samples(x, params):
    samples = x.samples
    folded = centered_modulo(samples.real, params.threshold) + 1j * centered_modulo(samples.imag, params.threshold)
    return FoldedSamples(folded, params, x.sample_period, x.sigma, x.start)


def fold_distance(a, b, threshold):
    """Largest gap between two records on the circle of circumference 2λ, per axis.

    -λ and λ - ε are ε apart.
    """
    gap = np.asarray(a, dtype=np.complex128) - np.asarray(b, dtype=np.complex128)
    if gap.size == 0:
        return 0.0
    wrapped = np.maximum(np.abs(centered_modulo(gap.real, threshold)), np.abs(centered_modulo(gap.imag, threshold)))
    return float(np.max(wrapped))


def snap_to_lattice(values, threshold, tol):
    """Round each component to the nearest multiple of 2λ.

    :param tol: largest accepted distance (absolute units) from the lattice
    """
    step = 2.0 * threshold
    values = np.asarray(values, dtype=np.complex128)
    snapped = step * (np.round(values.real / step) + 1j * np.round(values.imag / step))
    if values.size:
        deviation = float(np.max(np.maximum(np.abs(values.real - snapped.real), np.abs(values.imag - snapped.imag))))
        if deviation > tol:
            raise ResidualSnapError(
                f"❌ values are {deviation:.3e} away from the 2λ lattice (tolerance {tol:.3e})",
                residual=deviation / step,
            )
    return snapped


def residual(x, h):
    """v[k] = x[k] - h[k], snapped onto 2λℤ when within 1e-6·λ."""
    if x.length != h.length:
        raise LengthMismatchError(f"❌ signal has {x.length} samples, folded record has {h.length}")
    raw = x.samples - h.samples
    values = snap_to_lattice(raw, h.threshold, SNAP_TOL * h.threshold)
    return ResidualSequence(values, h.threshold)


def finite_difference(s, order=1):
    """Δ^N s with Δs[k] = s[k+1] - s[k]."""
    values = np.asarray(s)
    if order < 1:
        raise ValueError(f"difference order must be ≥ 1, got {order}")
    if values.size <= order:
        raise SequenceTooShortError(f"❌ order-{order} difference needs more than {order} samples, got {values.size}")
    return np.diff(values, n=order)


def anti_difference(d, initial):
    """o[0] = initial, o[k+1] = o[k] + d[k]."""
    d = np.asarray(d)
    dtype = np.result_type(d, np.asarray(initial))
    return np.concatenate([np.array([initial], dtype=dtype), initial + np.cumsum(d, dtype=dtype)])


def itoh_check(x, threshold):
    """True iff every step |Δ re x|, |Δ im x| is at most 2λ."""
    samples = x.samples if isinstance(x, ComplexSignal) else np.asarray(x, dtype=np.complex128)
    if samples.size < 2:
        raise SequenceTooShortError("❌ the Itoh condition needs at least two samples")
    steps = np.diff(samples)
    largest = max(float(np.max(np.abs(steps.real))), float(np.max(np.abs(steps.imag))))
    return largest <= 2.0 * threshold


def fold_instants(v):
    """Difference-domain indices k where Δv[k] ≠ 0 in either component."""
    values = v.values if isinstance(v, ResidualSequence) else np.asarray(v, dtype=np.complex128)
    if values.size < 2:
        return np.array([], dtype=int)
    jumps = np.diff(values)
    return np.flatnonzero((jumps.real != 0) | (jumps.imag != 0))


def count_folds(v):
    return int(fold_instants(v).size)
