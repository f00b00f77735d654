"""Annihilating-filter recovery of fold instants and weights from out-of-band spectra."""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from errors import (
    AnnihilationFailureError,
    InsufficientSamplesError,
    InvalidSignalError,
    OffCircleRootError,
    RankDeficiencyError,
    RootConvergenceError,
    SingularSystemError,
    WindowOverlapError,
)
from frft_core import FrftSpectrum, as_angle, band_indices, out_of_band_indices

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-12
ROOT_MAX_ITER = 500
OFF_CIRCLE_TOL = 0.1


# -------------------- Domain Types -------------------- #

@dataclass(frozen=True, eq=False)
class DemodulatedSpectrum:
    """ℑ(n) = V̄[n] / (A_α κ(n)) on a contiguous window of fractional frequency indices."""
    values: np.ndarray
    window: range

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        if values.size != len(self.window):
            raise InvalidSignalError(f"❌ {values.size} values for a window of {len(self.window)} indices")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self):
        return self.values.size

    @property
    def indices(self):
        return np.arange(self.window.start, self.window.stop)


@dataclass(frozen=True, eq=False)
class AnnihilationFilter:
    """Monic taps Γ[0..M] with Γ[0] = 1."""
    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.complex128, copy=True).reshape(-1)
        if taps.size < 2:
            raise InvalidSignalError("❌ an annihilating filter has degree M ≥ 1")
        if taps[0] != 1:
            raise InvalidSignalError(f"❌ annihilating filter must be monic, leading tap is {taps[0]}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def degree(self):
        return self.taps.size - 1


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Fold instants k_m (t_m = k_m·T) with complex weights c[m]."""
    instants: np.ndarray
    weights: np.ndarray
    sample_period: float = 1.0

    def __post_init__(self):
        instants = np.array(self.instants, dtype=np.int64, copy=True).reshape(-1)
        weights = np.array(self.weights, dtype=np.complex128, copy=True).reshape(-1)
        if instants.size != weights.size:
            raise InvalidSignalError(f"❌ {instants.size} instants but {weights.size} weights")
        if instants.size > 1 and np.any(np.diff(instants) <= 0):
            raise InvalidSignalError("❌ spike instants must be strictly increasing")
        if instants.size and instants[0] < 0:
            raise InvalidSignalError("❌ spike instants must be non-negative")
        instants.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "instants", instants)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def empty(cls, sample_period=1.0):
        return cls(np.array([], dtype=np.int64), np.array([], dtype=np.complex128), sample_period)

    @property
    def count(self):
        return int(self.instants.size)

    @property
    def times(self):
        return self.instants * self.sample_period

    def to_sequence(self, length):
        """Spike sequence v̄[k] = Σ c[m] δ[k - k_m] of the given length."""
        if self.count and self.instants[-1] >= length:
            raise InvalidSignalError(f"❌ instant {self.instants[-1]} outside a sequence of length {length}")
        sequence = np.zeros(length, dtype=np.complex128)
        sequence[self.instants] = self.weights
        return sequence

    def without_zero_weights(self):
        keep = self.weights != 0
        return SpikeTrain(self.instants[keep], self.weights[keep], self.sample_period)


class SpikeEstimate(NamedTuple):
    spikes: SpikeTrain
    fit_residual: float
    filter_residual: float


# -------------------- Helpers -------------------- #

def out_of_band_window(bandwidth_index, length):
    """Contiguous run n ∈ [R+1, N-1-R] of I_N outside E_{R,N}."""
    indices = out_of_band_indices(bandwidth_index, length)
    if indices.size == 0:
        return range(bandwidth_index + 1, bandwidth_index + 1)
    return range(int(indices[0]), int(indices[-1]) + 1)


def instants_to_modes(instants, length):
    """ς_m = e^{-j2πk_m/N}."""
    return np.exp(-2j * math.pi * np.asarray(instants, dtype=float) / length)


def mode_matrix(demodulated, instants, transform_length):
    """U[r, m] = ς_m^{n_r} over the window indices n_r."""
    modes = instants_to_modes(instants, transform_length)
    return modes[None, :] ** demodulated.indices[:, None]


def fit_residual(demodulated, instants, transform_length):
    """‖ℑ - Uχ‖ / ‖ℑ‖ for the least-squares χ; zero iff the modes annihilate ℑ."""
    values = demodulated.values
    norm = np.linalg.norm(values)
    if norm == 0:
        return 0.0
    if len(instants) == 0:
        return 1.0
    matrix = mode_matrix(demodulated, instants, transform_length)
    chi, _, _, _ = scipy.linalg.lstsq(matrix, values, lapack_driver="gelsd")
    return float(np.linalg.norm(values - matrix @ chi) / norm)


def filter_from_roots(roots):
    """Γ(z) = Π (1 - ς_m z^{-1})."""
    return AnnihilationFilter(np.poly(np.asarray(roots, dtype=np.complex128)).astype(np.complex128))


def annihilation_residual(annihilating_filter, demodulated):
    """‖Γ * ℑ‖ / ‖ℑ‖ over the rows where the convolution is fully defined."""
    values = demodulated.values
    norm = np.linalg.norm(values)
    if norm == 0 or values.size <= annihilating_filter.degree:
        return 0.0
    convolution = np.convolve(annihilating_filter.taps, values, mode="valid")
    return float(np.linalg.norm(convolution) / norm)


# -------------------- Operations -------------------- #

def demodulate_chirp(spectrum, window, bandwidth_index=None, from_folded=True):
    """Strip A_α κ(n) from a spectrum on an out-of-band window.

    :param spectrum: H̄ of the differenced folded samples, or V̄ when from_folded is False
    :param window: range of indices into the spectrum
    :param bandwidth_index: R; when given the window must avoid E_{R,N}
    :param from_folded: apply the sign of H̄[n] = -V̄[n] outside the band
    """
    length = spectrum.length
    if window.start < 0 or window.stop > length:
        raise WindowOverlapError(f"❌ window {window} is outside I_{length}")
    if bandwidth_index is not None and len(window):
        overlap = np.intersect1d(np.arange(window.start, window.stop), band_indices(bandwidth_index, length))
        if overlap.size:
            raise WindowOverlapError(f"❌ window {window} overlaps the band E_{{{bandwidth_index},{length}}} at {overlap.tolist()}")

    angle = spectrum.angle
    n = np.arange(window.start, window.stop)
    kappa = np.exp(0.5j * angle.cot * (spectrum.freq_step * n) ** 2)
    sign = -1.0 if from_folded else 1.0
    values = sign * spectrum.coeffs[window.start:window.stop] / (angle.amplitude * kappa)
    return DemodulatedSpectrum(values, window)


def solve_annihilation(demodulated, fold_budget, regularization=0.0):
    """Monic Γ of degree M minimizing ‖Γ * ℑ‖ over all valid rows.

    The Toeplitz rows are Σ_{ϑ=1..M} Γ[ϑ] ℑ[n-ϑ] = -ℑ[n] for n = M..L-1 and the
    system is solved by SVD least squares (minimum norm when M is overestimated).
    A positive ``regularization`` adds μ = regularization·trace(AᴴA) on the diagonal
    of the normal equations, applied as the equivalent augmented system.
    """
    values = demodulated.values
    length = values.size
    if fold_budget < 1:
        raise ValueError(f"annihilating filter degree must be ≥ 1, got {fold_budget}")
    if length < 2 * fold_budget:
        raise InsufficientSamplesError(
            f"❌ {length} out-of-band values cannot determine {fold_budget} folds (need {2 * fold_budget})"
        )
    if not np.any(values):
        raise RankDeficiencyError("❌ the out-of-band spectrum is identically zero", residual=0.0)

    matrix = scipy.linalg.toeplitz(values[fold_budget - 1:length - 1], values[fold_budget - 1::-1])
    rhs = -values[fold_budget:]
    if regularization > 0:
        mu = regularization * float(np.sum(np.abs(matrix) ** 2))
        matrix = np.vstack([matrix, math.sqrt(mu) * np.eye(fold_budget)])
        rhs = np.concatenate([rhs, np.zeros(fold_budget, dtype=np.complex128)])

    solution, _, rank, _ = scipy.linalg.lstsq(matrix, rhs, lapack_driver="gelsd")
    if rank < fold_budget:
        logger.debug("annihilation system has rank %d < M=%d, using minimum-norm filter", rank, fold_budget)
    return AnnihilationFilter(np.concatenate([[1.0 + 0j], solution]))


def _polish(taps, derivative, root):
    value = np.polyval(taps, root)
    for _ in range(ROOT_MAX_ITER):
        if abs(value) <= ROOT_TOL:
            break
        slope = np.polyval(derivative, root)
        if slope == 0:
            break
        candidate = root - value / slope
        candidate_value = np.polyval(taps, candidate)
        if abs(candidate_value) >= abs(value):
            break
        root, value = candidate, candidate_value
    return root


def polynomial_roots(annihilating_filter):
    """Roots of z^M Γ(z) from companion-matrix eigenvalues, Newton-polished."""
    taps = annihilating_filter.taps
    degree = annihilating_filter.degree
    companion = np.zeros((degree, degree), dtype=np.complex128)
    companion[0, :] = -taps[1:]
    companion[np.arange(1, degree), np.arange(degree - 1)] = 1.0
    try:
        eigenvalues = np.linalg.eigvals(companion)
    except np.linalg.LinAlgError as exc:
        raise RootConvergenceError(f"❌ companion eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(eigenvalues)):
        raise RootConvergenceError("❌ companion eigenvalues are not finite")

    derivative = np.polyder(taps)
    return np.array([_polish(taps, derivative, root) for root in eigenvalues], dtype=np.complex128)


def roots_to_instants(roots, transform_length, drop_off_circle=False):
    """k_m = round(-arg(ς_m)·N/2π) mod N for roots near the unit circle, sorted and de-duplicated.

    :param transform_length: N = Q-1, the length of the differenced record
    """
    roots = np.asarray(roots, dtype=np.complex128).reshape(-1)
    on_circle = np.abs(1.0 - np.abs(roots)) < OFF_CIRCLE_TOL
    if not np.all(on_circle):
        if not drop_off_circle:
            worst = roots[~on_circle][0]
            raise OffCircleRootError(f"❌ root {worst:.4g} is off the unit circle (|ς|={abs(worst):.4f})", residual=1.0)
        logger.debug("dropping %d off-circle roots", int(np.count_nonzero(~on_circle)))
        roots = roots[on_circle]
    instants = np.mod(np.round(-np.angle(roots) * transform_length / (2.0 * math.pi)), transform_length)
    return np.unique(instants.astype(np.int64))


def estimate_amplitudes(demodulated, instants, alpha, transform_length, sample_period=1.0):
    """Least-squares Vandermonde solve Uχ = ℑ, then c[m] = χ_m e^{-j(cot α/2) t_m²}."""
    instants = np.asarray(instants, dtype=np.int64).reshape(-1)
    if instants.size == 0:
        return SpikeTrain.empty(sample_period)
    if np.unique(instants).size != instants.size:
        raise SingularSystemError(f"❌ colliding instants {instants.tolist()} make the Vandermonde system singular")
    if demodulated.length < instants.size:
        raise InsufficientSamplesError(f"❌ {demodulated.length} values cannot determine {instants.size} weights")

    angle = as_angle(alpha)
    instants = np.sort(instants)
    vandermonde = mode_matrix(demodulated, instants, transform_length)
    chi, _, rank, _ = scipy.linalg.lstsq(vandermonde, demodulated.values, lapack_driver="gelsd")
    if rank < instants.size:
        raise SingularSystemError(f"❌ Vandermonde system has rank {rank} < {instants.size}")
    times = instants * sample_period
    weights = chi * np.exp(-0.5j * angle.cot * times**2)
    return SpikeTrain(instants, weights, sample_period)


def synthesize_spike_spectrum(spikes, alpha, transform_length):
    """V̄[n] = Σ_m c[m] A_α exp(j((cot α/2) t_m² - csc α ū₀ n t_m + (cot α/2) ū₀² n²)) for n ∈ I_N."""
    angle = as_angle(alpha)
    sample_period = spikes.sample_period
    freq_step = 2.0 * math.pi * math.sin(angle.alpha) / (transform_length * sample_period)
    n = np.arange(transform_length)
    if spikes.count == 0:
        return FrftSpectrum(np.zeros(transform_length, dtype=np.complex128), angle, freq_step, sample_period)
    t = spikes.times
    phase = (
        0.5 * angle.cot * t[None, :] ** 2
        - angle.csc * freq_step * np.outer(n, t)
        + 0.5 * angle.cot * (freq_step * n[:, None]) ** 2
    )
    coeffs = angle.amplitude * (np.exp(1j * phase) @ spikes.weights)
    return FrftSpectrum(coeffs, angle, freq_step, sample_period)


def estimate_spikes(demodulated, fold_budget, alpha, transform_length, sample_period=1.0, regularization=0.0,
                    fit_tol=None):
    """solve_annihilation → polynomial_roots → roots_to_instants → estimate_amplitudes.

    :param fit_tol: reject the gridded instants when their fit residual exceeds it
    :return: SpikeEstimate with the fit residual of the gridded modes and the
        annihilation residual of the filter rebuilt from them
    """
    annihilating_filter = solve_annihilation(demodulated, fold_budget, regularization)
    roots = polynomial_roots(annihilating_filter)
    instants = roots_to_instants(roots, transform_length, drop_off_circle=True)
    if instants.size == 0:
        raise OffCircleRootError("❌ no root of the annihilating filter lies near the unit circle", residual=1.0)

    residual = fit_residual(demodulated, instants, transform_length)
    if fit_tol is not None and residual > fit_tol:
        raise AnnihilationFailureError(
            f"❌ annihilation residual {residual:.3e} exceeds {fit_tol:.0e}; "
            f"fold budget M={fold_budget} too small or criterion violated",
            residual=residual,
        )
    gridded_filter = filter_from_roots(instants_to_modes(instants, transform_length))
    spikes = estimate_amplitudes(demodulated, instants, alpha, transform_length, sample_period)
    return SpikeEstimate(spikes, residual, annihilation_residual(gridded_filter, demodulated))
