import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from errors import (
    AnnihilationFailureError,
    CriterionViolationError,
    EstimationError,
    InvalidCriterionError,
    LengthMismatchError,
)
from frft_core import (
    ComplexSignal,
    as_angle,
    bandwidth_index as compute_bandwidth_index,
    dtfrft,
    frfs_analyze,
    frfs_synthesize,
)
from modulo_adc import ResidualSequence, anti_difference, centered_modulo, finite_difference, snap_to_lattice
from spectral_estimation import (
    SpikeTrain,
    demodulate_chirp,
    estimate_spikes,
    out_of_band_window,
)

logger = logging.getLogger(__name__)

PERIOD_RTOL = 1e-12
SILENCE_TOL = 1e-9
WEIGHT_SNAP_TOL = 1e-3
ANNIHILATION_TOL = 1e-4
AUTO_BUDGET_TOL = 1e-6
ANCHORS = ("mean", "first")


# -------------------- Domain Types -------------------- #

@dataclass(frozen=True)
class SamplingCriterion:
    """Inputs to the sampling-density theorem; QT = σ must hold."""
    omega_alpha: float
    sigma: float
    alpha: float
    fold_budget: int
    num_samples: int
    sample_period: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidCriterionError(f"❌ period sigma must be positive, got {self.sigma}")
        if self.omega_alpha < 0:
            raise InvalidCriterionError(f"❌ bandwidth Ω_α must be ≥ 0, got {self.omega_alpha}")
        if self.fold_budget < 0:
            raise InvalidCriterionError(f"❌ fold budget M must be ≥ 0, got {self.fold_budget}")
        if self.num_samples < 2:
            raise InvalidCriterionError(f"❌ Q must be ≥ 2, got {self.num_samples}")
        sample_period = self.sigma / self.num_samples if self.sample_period is None else float(self.sample_period)
        if not math.isclose(self.num_samples * sample_period, self.sigma, rel_tol=PERIOD_RTOL):
            raise InvalidCriterionError(
                f"❌ Q·T = {self.num_samples * sample_period} differs from σ = {self.sigma}"
            )
        object.__setattr__(self, "sample_period", sample_period)
        object.__setattr__(self, "alpha", as_angle(self.alpha).alpha)

    @classmethod
    def from_bandwidth_index(cls, bandwidth_index, alpha, sigma, fold_budget, num_samples, sample_period=None):
        omega = 2.0 * math.pi * abs(math.sin(as_angle(alpha).alpha)) * bandwidth_index / sigma
        return cls(omega, sigma, alpha, fold_budget, num_samples, sample_period)

    @property
    def bandwidth_index(self):
        return compute_bandwidth_index(self.omega_alpha, self.alpha, self.sigma)

    def with_budget(self, fold_budget):
        return SamplingCriterion(self.omega_alpha, self.sigma, self.alpha, fold_budget, self.num_samples, self.sample_period)


@dataclass(frozen=True)
class CriterionDecision:
    passed: bool
    bandwidth_index: int
    fold_budget: int
    num_samples: int
    minimal_q: int
    window_length: int
    slack: int
    max_sample_period: float

    def as_dict(self):
        return {
            "passed": self.passed,
            "bandwidth_index": self.bandwidth_index,
            "fold_budget": self.fold_budget,
            "num_samples": self.num_samples,
            "minimal_q": self.minimal_q,
            "window_length": self.window_length,
            "slack": self.slack,
            "max_sample_period": self.max_sample_period,
        }


class ResidualEstimate(NamedTuple):
    residual: ResidualSequence
    spikes: SpikeTrain
    annihilation_residual: float
    filter_residual: float = 0.0


@dataclass(frozen=True)
class ReconstructionDiagnostics:
    annihilation_residual: float
    criterion: CriterionDecision
    realized_folds: int
    anchor: str
    forced: bool = False
    filter_residual: float = 0.0


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    recovered: ComplexSignal
    spikes: SpikeTrain
    constant_offset: complex
    diagnostics: ReconstructionDiagnostics
    dense: Optional[ComplexSignal] = None


# -------------------- Criterion -------------------- #

def check_sampling_criterion(criterion):
    """Q ≥ 2(R + M + 1) with R = ⌈Ω_α σ / 2π sin α⌉, and T ≤ σ/Q."""
    bandwidth_index = criterion.bandwidth_index
    budget = criterion.fold_budget
    minimal_q = 2 * (bandwidth_index + budget + 1)
    window_length = criterion.num_samples - 2 * bandwidth_index - 2
    period_ok = criterion.sample_period <= criterion.sigma / criterion.num_samples * (1 + PERIOD_RTOL)
    return CriterionDecision(
        passed=criterion.num_samples >= minimal_q and period_ok,
        bandwidth_index=bandwidth_index,
        fold_budget=budget,
        num_samples=criterion.num_samples,
        minimal_q=minimal_q,
        window_length=window_length,
        slack=window_length - 2 * budget,
        max_sample_period=criterion.sigma / minimal_q,
    )


# -------------------- Pipeline stages -------------------- #

def extract_out_of_band(h, alpha, bandwidth_index):
    """H̄ = dtfrft(Δh) over I_{Q-1}, and the window where H̄ = -V̄.

    Returns the full spectrum and the window range; callers slice it.
    """
    differenced = ComplexSignal(finite_difference(h.samples, 1), h.sample_period)
    spectrum = dtfrft(differenced, alpha)
    return spectrum, out_of_band_window(bandwidth_index, spectrum.length)


def recover_residual(h, alpha, bandwidth_index, fold_budget, regularization=0.0):
    """Estimate {c[m], t_m} from the out-of-band spectrum and integrate them into v[k].

    v[0] = 0; the global constant is fixed later by :func:`align_constant`.
    """
    threshold = h.threshold
    step = 2.0 * threshold
    spectrum, window = extract_out_of_band(h, alpha, bandwidth_index)
    length = spectrum.length
    demodulated = demodulate_chirp(spectrum, window, bandwidth_index)

    silence = SILENCE_TOL * step * math.sqrt(max(1, demodulated.length))
    if np.linalg.norm(demodulated.values) <= silence:
        logger.debug("out-of-band spectrum is silent, no folds")
        return ResidualEstimate(ResidualSequence(np.zeros(h.length), threshold), SpikeTrain.empty(h.sample_period), 0.0)
    if fold_budget == 0:
        raise AnnihilationFailureError("❌ folds are present but the fold budget is 0", residual=1.0)

    estimate = estimate_spikes(demodulated, fold_budget, alpha, length, h.sample_period, regularization,
                               fit_tol=ANNIHILATION_TOL)
    spikes = estimate.spikes
    weights = snap_to_lattice(spikes.weights, threshold, WEIGHT_SNAP_TOL * step)
    spikes = SpikeTrain(spikes.instants, weights, h.sample_period).without_zero_weights()

    values = anti_difference(spikes.to_sequence(length), 0.0 + 0.0j)
    logger.debug("recovered %d folds, annihilation residual %.3e", spikes.count, estimate.fit_residual)
    return ResidualEstimate(ResidualSequence(values, threshold), spikes, estimate.fit_residual, estimate.filter_residual)


def recover_samples(h, v):
    """f[k] = h[k] + v[k]."""
    values = v.values if isinstance(v, ResidualSequence) else np.asarray(v)
    if values.size != h.length:
        raise LengthMismatchError(f"❌ folded record has {h.length} samples, residual has {values.size}")
    return ComplexSignal(h.samples + values, h.sample_period, h.sigma, h.start)


def _lattice_round(value, step):
    return step * complex(round(value.real / step), round(value.imag / step))


def align_constant(f, threshold, method="mean"):
    """Add the constant z ∈ 2λℤ + j2λℤ that anchors f.

    ``mean`` picks z closest to -mean(f), exact for zero-mean signals.
    ``first`` picks z that puts f[0] back in [-λ, λ) on both axes, exact when
    the first sample never left the converter range. Returns (aligned signal, z).
    """
    if method not in ANCHORS:
        raise ValueError(f"unknown anchor {method!r}, expected one of {ANCHORS}")
    step = 2.0 * threshold

    if method == "first":
        first = complex(f.samples[0])
        wrapped = complex(centered_modulo(first.real, threshold), centered_modulo(first.imag, threshold))
        offset = _lattice_round(wrapped - first, step)
    else:
        offset = _lattice_round(-complex(np.mean(f.samples)), step)
    return f.with_samples(f.samples + offset), offset


def recover_continuous(f, alpha, bandwidth_index, t_grid):
    """FRFS analysis on one period followed by synthesis on an arbitrary grid."""
    return frfs_synthesize(frfs_analyze(f, alpha, bandwidth_index), alpha, t_grid)


def resynthesize_increments(f, alpha, bandwidth_index, dense_factor):
    """Densify f whose first difference, not f itself, is FRFS-bandlimited.

    Δf is analysed on its own grid t_k = kT, k < Q-1, and synthesised
    ``dense_factor`` times per sample interval. The fine steps of every interval
    are shifted to add up to Δf[k] and then integrated from f[0], so every
    ``dense_factor``-th output sample is a sample of f.
    """
    if int(dense_factor) != dense_factor or dense_factor < 1:
        raise ValueError(f"dense factor must be a positive integer, got {dense_factor}")
    dense_factor = int(dense_factor)
    increments = finite_difference(f.samples, 1)
    count = increments.size
    coeffs = frfs_analyze(ComplexSignal(increments, f.sample_period, count * f.sample_period, 0.0),
                          alpha, bandwidth_index)

    step = f.sample_period / dense_factor
    rates = frfs_synthesize(coeffs, alpha, np.arange(count * dense_factor) * step).samples
    fine = rates.reshape(count, dense_factor) / dense_factor
    fine += ((increments - fine.sum(axis=1)) / dense_factor)[:, None]
    samples = anti_difference(fine.reshape(-1), complex(f.samples[0]))
    return ComplexSignal(samples, step, f.sigma, f.start)


def detect_fold_budget(h, alpha, bandwidth_index, max_budget=None, regularization=0.0):
    """Smallest M whose gridded annihilation residual drops below 1e-6."""
    window = out_of_band_window(bandwidth_index, h.length - 1)
    largest = len(window) // 2 if max_budget is None else min(max_budget, len(window) // 2)
    for budget in range(0, largest + 1):
        try:
            estimate = recover_residual(h, alpha, bandwidth_index, budget, regularization)
        except EstimationError:
            continue
        if estimate.annihilation_residual < AUTO_BUDGET_TOL:
            logger.info("🔍 detected fold budget M=%d", budget)
            return budget
    raise AnnihilationFailureError(
        f"❌ no fold budget up to M={largest} annihilates the out-of-band spectrum", residual=1.0
    )


def reconstruct(h, criterion, anchor="mean", regularization=0.0, force=False, dense_factor=1):
    """Check the criterion, estimate the residual, unfold and anchor the constant.

    :param force: skip the criterion guard and clamp M to half the window
    :param dense_factor: when above 1, also resynthesise the result that many times per sample interval
    """
    if h.length != criterion.num_samples:
        raise LengthMismatchError(f"❌ folded record has {h.length} samples, criterion expects Q={criterion.num_samples}")
    decision = check_sampling_criterion(criterion)
    budget = criterion.fold_budget
    if not decision.passed:
        if not force:
            raise CriterionViolationError(
                f"❌ Q={criterion.num_samples} is below the sampling bound; need Q ≥ {decision.minimal_q}",
                required_q=decision.minimal_q,
            )
        budget = min(budget, max(0, decision.window_length) // 2)
        logger.warning("⚠️ forcing reconstruction below the bound with M=%d", budget)

    alpha = criterion.alpha
    bandwidth_index = decision.bandwidth_index
    estimate = recover_residual(h, alpha, bandwidth_index, budget, regularization)
    unfolded = recover_samples(h, estimate.residual)
    recovered, offset = align_constant(unfolded, h.threshold, anchor)

    dense = None
    if dense_factor > 1:
        dense = resynthesize_increments(recovered, alpha, bandwidth_index, dense_factor)

    diagnostics = ReconstructionDiagnostics(
        annihilation_residual=estimate.annihilation_residual,
        criterion=decision,
        realized_folds=estimate.spikes.count,
        anchor=anchor,
        forced=force and not decision.passed,
        filter_residual=estimate.filter_residual,
    )
    logger.info("✅ reconstructed %d samples with %d folds", h.length, estimate.spikes.count)
    return ReconstructionReport(recovered, estimate.spikes, offset, diagnostics, dense)
