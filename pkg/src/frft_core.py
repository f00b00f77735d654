import logging
import math
from dataclasses import dataclass, field

import numpy as np

from errors import (
    DegenerateAngleError,
    FrftMismatchError,
    InsufficientSamplesError,
    InvalidAngleError,
    InvalidSignalError,
)

logger = logging.getLogger(__name__)

ANGLE_TOL = 1e-12
PERIOD_RTOL = 1e-9


# -------------------- Domain Types -------------------- #

@dataclass(frozen=True)
class FrftAngle:
    """Rotation angle α of the time-frequency plane, order p = 2α/π."""
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise InvalidAngleError(f"❌ angle must be finite, got {self.alpha}")

    @property
    def order(self):
        return 2.0 * self.alpha / math.pi

    @property
    def is_degenerate(self):
        return abs(math.sin(self.alpha)) < ANGLE_TOL

    @property
    def half_turns(self):
        """Integer k with α ≈ kπ; only meaningful for degenerate angles."""
        return int(round(self.alpha / math.pi))

    def require_regular(self):
        if self.is_degenerate:
            raise DegenerateAngleError(
                f"❌ α = {self.alpha} is a multiple of π; the chirp kernel degenerates to a Dirac"
            )

    @property
    def cot(self):
        self.require_regular()
        return math.cos(self.alpha) / math.sin(self.alpha)

    @property
    def csc(self):
        self.require_regular()
        return 1.0 / math.sin(self.alpha)

    @property
    def amplitude(self):
        """A_α = sqrt((1 - j cot α) / 2π), principal branch."""
        return complex(np.sqrt(complex(1.0, -self.cot) / (2.0 * math.pi)))

    def __neg__(self):
        return FrftAngle(-self.alpha)


def as_angle(alpha):
    return alpha if isinstance(alpha, FrftAngle) else FrftAngle(float(alpha))


def _readonly(values, dtype=np.complex128):
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """Uniformly sampled complex sequence x[k] = x(start + k·T) of period sigma."""
    samples: np.ndarray
    sample_period: float = 1.0
    sigma: float = None
    start: float = 0.0

    def __post_init__(self):
        samples = _readonly(self.samples)
        if samples.size < 1:
            raise InvalidSignalError("❌ a signal needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise InvalidSignalError("❌ signal samples must be finite")
        if not (self.sample_period > 0 and math.isfinite(self.sample_period)):
            raise InvalidSignalError(f"❌ sample period must be positive, got {self.sample_period}")
        sigma = samples.size * self.sample_period if self.sigma is None else float(self.sigma)
        if not (sigma > 0 and math.isfinite(sigma)):
            raise InvalidSignalError(f"❌ period sigma must be positive, got {sigma}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "start", float(self.start))

    @property
    def length(self):
        return self.samples.size

    @property
    def times(self):
        return self.start + np.arange(self.length) * self.sample_period

    def covers_period(self):
        return math.isclose(self.length * self.sample_period, self.sigma, rel_tol=PERIOD_RTOL)

    def with_samples(self, samples):
        return ComplexSignal(samples, self.sample_period, self.sigma, self.start)


@dataclass(frozen=True, eq=False)
class FrftSpectrum:
    """Discrete-time FRFT coefficients X[n], n = 0..N-1, on the step freq_step."""
    coeffs: np.ndarray
    angle: FrftAngle
    freq_step: float
    sample_period: float = 1.0
    start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _readonly(self.coeffs))
        object.__setattr__(self, "angle", as_angle(self.angle))

    @property
    def length(self):
        return self.coeffs.size

    @property
    def frequencies(self):
        return np.arange(self.length) * self.freq_step


@dataclass(frozen=True, eq=False)
class FrfsCoefficients:
    """FRFS coefficients X̂(w) stored in signed order w = -R..R."""
    coeffs: np.ndarray
    bandwidth_index: int
    sigma: float
    angle: FrftAngle = field(default=None)

    def __post_init__(self):
        coeffs = _readonly(self.coeffs)
        if self.bandwidth_index < 0:
            raise InvalidSignalError(f"❌ bandwidth index must be ≥ 0, got {self.bandwidth_index}")
        if coeffs.size != 2 * self.bandwidth_index + 1:
            raise InvalidSignalError(
                f"❌ expected {2 * self.bandwidth_index + 1} coefficients for R={self.bandwidth_index}, got {coeffs.size}"
            )
        if not self.sigma > 0:
            raise InvalidSignalError(f"❌ period sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "bandwidth_index", int(self.bandwidth_index))
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.angle is not None:
            object.__setattr__(self, "angle", as_angle(self.angle))

    @property
    def signed_indices(self):
        return np.arange(-self.bandwidth_index, self.bandwidth_index + 1)

    def wrapped_indices(self, num_samples):
        """Positions of the coefficients inside E_{R,Q} ⊂ {0..Q-1}."""
        return np.mod(self.signed_indices, num_samples)

    def scaled(self, factor):
        return FrfsCoefficients(self.coeffs * factor, self.bandwidth_index, self.sigma, self.angle)


# -------------------- Index sets and grids -------------------- #

def band_indices(bandwidth_index, length):
    """E_{R,N} = [0, R] ∪ [N-R, N-1], returned sorted and without duplicates."""
    signed = np.arange(-bandwidth_index, bandwidth_index + 1)
    return np.unique(np.mod(signed, length))


def out_of_band_indices(bandwidth_index, length):
    return np.setdiff1d(np.arange(length), band_indices(bandwidth_index, length))


def bandwidth_index(omega_alpha, alpha, sigma):
    """R = ⌈Ω_α σ / (2π sin α)⌉; the tolerance keeps exact integers from rounding up."""
    angle = as_angle(alpha)
    angle.require_regular()
    ratio = omega_alpha * sigma / (2.0 * math.pi * abs(math.sin(angle.alpha)))
    return max(0, int(math.ceil(ratio - 1e-9)))


# -------------------- Kernel and discrete transform -------------------- #

def frft_kernel(alpha, u, t):
    """K_α(u, t) = A_α exp(j((cot α/2) t² - csc α u t + (cot α/2) u²)); broadcasts over u and t."""
    angle = as_angle(alpha)
    cot, csc = angle.cot, angle.csc
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)
    phase = 0.5 * cot * t**2 - csc * u * t + 0.5 * cot * u**2
    value = angle.amplitude * np.exp(1j * phase)
    return complex(value) if np.ndim(value) == 0 else value


def _degenerate_transform(samples, angle):
    if angle.half_turns % 2 == 0:
        return np.array(samples, dtype=np.complex128)
    # x[(-k) mod N]
    return np.roll(samples[::-1], 1)


def _chirps(angle, length, sample_period):
    freq_step = 2.0 * math.pi * math.sin(angle.alpha) / (length * sample_period)
    t = np.arange(length) * sample_period
    n = np.arange(length)
    time_chirp = np.exp(0.5j * angle.cot * t**2)
    freq_chirp = np.exp(0.5j * angle.cot * (freq_step * n) ** 2)
    return freq_step, time_chirp, freq_chirp


def dtfrft(x, alpha):
    """Discrete-time FRFT of a uniformly sampled signal.

    X[n] = Σ_k A_α x[k] exp(j((cot α/2) t_k² - csc α ū₀ t_k n + (cot α/2) ū₀² n²))
    with t_k = k·T measured from the first sample and ū₀ = 2π sin α/(N·T).
    Since csc α · ū₀ · t_k · n = 2πkn/N the middle factor is a plain DFT.
    """
    angle = as_angle(alpha)
    samples = x.samples
    length = samples.size
    if angle.is_degenerate:
        logger.debug("α=%s is degenerate, dispatching to identity/reflection", angle.alpha)
        return FrftSpectrum(_degenerate_transform(samples, angle), angle, 0.0, x.sample_period, x.start)

    freq_step, time_chirp, freq_chirp = _chirps(angle, length, x.sample_period)
    coeffs = angle.amplitude * freq_chirp * np.fft.fft(samples * time_chirp)
    return FrftSpectrum(coeffs, angle, freq_step, x.sample_period, x.start)


def inverse_dtfrft(spectrum, alpha=None, length=None):
    """Exact inverse of :func:`dtfrft`.

    x[k] = 2π/(N·|csc α|) · Σ_n X[n] K_{-α}(n ū₀, t_k). The constant is
    1/(N·A_α·A_{-α}) because A_α·A_{-α} = |csc α|/2π on the principal branch.

    :param alpha: optional expected angle; a different value raises FrftMismatchError
    :param length: optional expected length
    """
    angle = spectrum.angle
    if alpha is not None and not math.isclose(as_angle(alpha).alpha, angle.alpha, abs_tol=1e-15):
        raise FrftMismatchError(f"❌ spectrum was computed at α={angle.alpha}, not {as_angle(alpha).alpha}")
    if length is not None and length != spectrum.length:
        raise FrftMismatchError(f"❌ spectrum has {spectrum.length} coefficients, expected {length}")

    coeffs = spectrum.coeffs
    if angle.is_degenerate:
        samples = _degenerate_transform(coeffs, angle)
    else:
        _, time_chirp, freq_chirp = _chirps(angle, coeffs.size, spectrum.sample_period)
        samples = np.conj(time_chirp) * np.fft.ifft(coeffs * np.conj(freq_chirp)) / angle.amplitude
    return ComplexSignal(samples, spectrum.sample_period, start=spectrum.start)


# -------------------- Fractional Fourier series -------------------- #

def frfs_basis(alpha, w, t, sigma):
    """Φ_α(w, t) = sqrt((sin α - j cos α)/σ) exp(j((cot α/2) t² - csc α w u₀ t + (cot α/2) w² u₀²)).

    For sin α < 0 the conjugate of Φ_{-α} is returned, which makes Φ_{-α}
    the exact dual of Φ_α under the Riemann-sum analysis.
    """
    angle = as_angle(alpha)
    angle.require_regular()
    if sigma <= 0:
        raise InvalidSignalError(f"❌ period sigma must be positive, got {sigma}")
    if math.sin(angle.alpha) < 0:
        return np.conj(frfs_basis(-angle, w, t, sigma))

    cot, csc = angle.cot, angle.csc
    u0 = 2.0 * math.pi * math.sin(angle.alpha) / sigma
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    scale = np.sqrt(complex(math.sin(angle.alpha), -math.cos(angle.alpha)) / sigma)
    phase = 0.5 * cot * t**2 - csc * w * u0 * t + 0.5 * cot * (w * u0) ** 2
    value = scale * np.exp(1j * phase)
    return complex(value) if np.ndim(value) == 0 else value


def frfs_synthesize(coeffs, alpha, t_grid):
    """x(t) = Σ_{|w|≤R} X̂(w) Φ_{-α}(w, t) evaluated on t_grid."""
    angle = as_angle(alpha)
    t_grid = np.asarray(t_grid, dtype=float).reshape(-1)
    basis = frfs_basis(-angle, coeffs.signed_indices[:, None], t_grid[None, :], coeffs.sigma)
    samples = coeffs.coeffs @ basis
    step = float(t_grid[1] - t_grid[0]) if t_grid.size > 1 else coeffs.sigma
    start = float(t_grid[0]) if t_grid.size else 0.0
    return ComplexSignal(samples, step, coeffs.sigma, start)


def _analysis(x, angle, signed):
    if not x.covers_period():
        raise InvalidSignalError(
            f"❌ analysis needs one full period: Q·T = {x.length * x.sample_period} but σ = {x.sigma}"
        )
    basis = frfs_basis(angle, signed[:, None], x.times[None, :], x.sigma)
    return x.sample_period * (basis @ x.samples)


def frfs_analyze(x, alpha, bandwidth_index):
    """X̂(w) = T Σ_k x(t_k) Φ_α(w, t_k) for |w| ≤ R (left Riemann sum over one period)."""
    angle = as_angle(alpha)
    if x.length < 2 * bandwidth_index + 1:
        raise InsufficientSamplesError(
            f"❌ analysis with R={bandwidth_index} needs Q ≥ {2 * bandwidth_index + 1}, got {x.length}"
        )
    signed = np.arange(-bandwidth_index, bandwidth_index + 1)
    return FrfsCoefficients(_analysis(x, angle, signed), bandwidth_index, x.sigma, angle)


def frfs_analyze_all(x, alpha):
    """Analyse every residue class of I_Q; returns (signed indices, coefficients)."""
    angle = as_angle(alpha)
    length = x.length
    signed = np.arange(-(length // 2), length - length // 2)
    return signed, _analysis(x, angle, signed)
