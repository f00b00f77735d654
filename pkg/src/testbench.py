"""Synthetic scenarios, error metrics and randomized trial sweeps."""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from errors import (
    ConfigError,
    InsufficientSamplesError,
    InvalidSignalError,
    LengthMismatchError,
    ModFrftError,
    ZeroReferenceError,
)
from frft_core import ComplexSignal, FrfsCoefficients, as_angle, frfs_synthesize
from modulo_adc import ModuloParams, anti_difference, count_folds, fold_distance, fold_instants, fold_samples, residual
from reconstruction import SamplingCriterion, reconstruct
from spectral_estimation import SpikeTrain

logger = logging.getLogger(__name__)

MAGNITUDE_RANGE = (0.3, 1.0)
CONSISTENCY_TOL = 1e-9


class FailureKind(str, Enum):
    CRITERION_VIOLATION = "criterion-violation"
    ANNIHILATION_FAILURE = "annihilation-failure"
    OFF_CIRCLE_ROOT = "off-circle-root"
    ROOT_NON_CONVERGENCE = "root-non-convergence"
    RANK_DEFICIENCY = "rank-deficiency"
    SINGULAR_SYSTEM = "singular-system"
    RESIDUAL_SNAP = "residual-snap"
    INSUFFICIENT_SAMPLES = "insufficient-samples"
    TOLERANCE = "tolerance"
    INCONSISTENT = "inconsistent"
    OTHER = "other"

    @classmethod
    def from_error(cls, exc):
        try:
            return cls(getattr(exc, "kind", "other"))
        except ValueError:
            return cls.OTHER


@dataclass(frozen=True)
class SignalSpec:
    alpha: float
    sigma: float
    bandwidth_index: int
    amplitude_scale: float
    seed: int = 0

    def __post_init__(self):
        as_angle(self.alpha).require_regular()
        if self.bandwidth_index < 0:
            raise InvalidSignalError(f"❌ bandwidth index R must be ≥ 0, got {self.bandwidth_index}")
        if not self.amplitude_scale > 0:
            raise InvalidSignalError(f"❌ amplitude scale β must be positive, got {self.amplitude_scale}")
        if not self.sigma > 0:
            raise InvalidSignalError(f"❌ period sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class TrialResult:
    passed: bool
    rel_rmse: float
    realized_folds: int
    offset: complex
    failure_kind: Optional[FailureKind] = None
    num_samples: int = 0
    fold_budget: int = 0
    recovered_folds: int = 0
    annihilation_residual: float = float("nan")

    def as_row(self):
        row = asdict(self)
        row["offset_re"] = self.offset.real
        row["offset_im"] = self.offset.imag
        row["failure_kind"] = self.failure_kind.value if self.failure_kind else ""
        del row["offset"]
        return row


# -------------------- Signal generation -------------------- #

def generate_signal(spec, num_samples, threshold=1.0):
    """Draw a random signal whose first difference is FRFD bandlimited.

    The increment is synthesized from 2R+1 FRFS coefficients on the (Q-1)-point
    grid t_k = kT with period (Q-1)T, integrated, centred and rescaled so the
    largest real or imaginary component equals β·λ. Returns the Q-sample signal
    on [-σ/2, σ/2) and the increment's coefficients (after rescaling).
    """
    bandwidth_index = spec.bandwidth_index
    if num_samples < max(2, 2 * bandwidth_index + 1):
        raise InsufficientSamplesError(
            f"❌ R={bandwidth_index} needs Q ≥ {max(2, 2 * bandwidth_index + 1)}, got {num_samples}"
        )
    rng = np.random.default_rng(spec.seed)
    size = 2 * bandwidth_index + 1
    magnitudes = rng.uniform(*MAGNITUDE_RANGE, size)
    phases = rng.uniform(0.0, 2.0 * math.pi, size)

    sample_period = spec.sigma / num_samples
    increments = num_samples - 1
    coeffs = FrfsCoefficients(magnitudes * np.exp(1j * phases), bandwidth_index, increments * sample_period, spec.alpha)
    increment = frfs_synthesize(coeffs, spec.alpha, np.arange(increments) * sample_period).samples

    samples = anti_difference(increment, 0.0 + 0.0j)
    samples = samples - samples.mean()
    peak = max(float(np.max(np.abs(samples.real))), float(np.max(np.abs(samples.imag))))
    scale = spec.amplitude_scale * threshold / peak
    signal = ComplexSignal(samples * scale, sample_period, spec.sigma, -0.5 * spec.sigma)
    return signal, coeffs.scaled(scale)


def spikes_from_residual(v, sample_period=1.0):
    """Ground-truth spike train Δv of a residual sequence."""
    instants = fold_instants(v)
    return SpikeTrain(instants, np.diff(v.values)[instants], sample_period)


def rel_rmse(a, b):
    """‖a - b‖₂ / ‖b‖₂."""
    a = a.samples if isinstance(a, ComplexSignal) else np.asarray(a, dtype=np.complex128)
    b = b.samples if isinstance(b, ComplexSignal) else np.asarray(b, dtype=np.complex128)
    if a.size != b.size:
        raise LengthMismatchError(f"❌ cannot compare {a.size} samples against {b.size}")
    reference = np.linalg.norm(b)
    if reference == 0:
        raise ZeroReferenceError("❌ reference signal is identically zero")
    return float(np.linalg.norm(a - b) / reference)


def ground_truth_offset(recovered, truth, threshold):
    """Lattice constant z ∈ 2λℤ + j2λℤ closest to mean(truth - recovered)."""
    step = 2.0 * threshold
    gap = complex(np.mean(truth.samples - recovered.samples))
    return step * complex(round(gap.real / step), round(gap.imag / step))


# -------------------- Trials -------------------- #

def run_trial(spec, num_samples, fold_budget=None, threshold=1.0, rmse_tol=1e-6, anchor="mean",
              regularization=0.0, force=False):
    """generate → fold → reconstruct → align against ground truth → metrics.

    :param fold_budget: M used by the criterion; defaults to the realized fold count
    """
    truth, _ = generate_signal(spec, num_samples, threshold)
    params = ModuloParams(threshold)
    folded = fold_samples(truth, params)
    realized = count_folds(residual(truth, folded))
    budget = realized if fold_budget is None else int(fold_budget)
    criterion = SamplingCriterion.from_bandwidth_index(
        spec.bandwidth_index, spec.alpha, spec.sigma, budget, num_samples
    )
    common = dict(num_samples=num_samples, fold_budget=budget)

    try:
        report = reconstruct(folded, criterion, anchor=anchor, regularization=regularization, force=force)
    except ModFrftError as exc:
        logger.debug("trial failed: %s", exc)
        measured = getattr(exc, "residual", None)
        return TrialResult(
            passed=False, rel_rmse=math.inf, realized_folds=realized, offset=0j,
            failure_kind=FailureKind.from_error(exc),
            annihilation_residual=math.nan if measured is None else float(measured), **common,
        )

    recovered = report.recovered
    offset = ground_truth_offset(recovered, truth, threshold)
    error = rel_rmse(recovered.samples + offset, truth)
    refolded = fold_samples(recovered, params).samples
    consistent = fold_distance(refolded, folded.samples, threshold) <= CONSISTENCY_TOL * max(1.0, threshold)

    failure = None
    if not consistent:
        failure = FailureKind.INCONSISTENT
    elif error >= rmse_tol:
        failure = FailureKind.TOLERANCE
    return TrialResult(
        passed=failure is None, rel_rmse=error, realized_folds=realized, offset=offset, failure_kind=failure,
        recovered_folds=report.spikes.count,
        annihilation_residual=report.diagnostics.annihilation_residual, **common,
    )


def realized_folds(spec, num_samples, threshold=1.0):
    truth, _ = generate_signal(spec, num_samples, threshold)
    return count_folds(residual(truth, fold_samples(truth, ModuloParams(threshold))))


def boundary_q(spec, threshold=1.0, max_q=4096):
    """Smallest Q with Q ≥ 2(R + M(Q) + 1), M(Q) the folds realized at Q samples.

    Returns (Q, M).
    """
    start = max(2, 2 * (spec.bandwidth_index + 1))
    for num_samples in range(start, max_q + 1):
        folds = realized_folds(spec, num_samples, threshold)
        if num_samples >= 2 * (spec.bandwidth_index + folds + 1):
            return num_samples, folds
    raise InsufficientSamplesError(f"❌ no Q ≤ {max_q} satisfies the sampling bound for {spec}")


@dataclass(frozen=True)
class NecessityResult:
    num_samples: int
    realized_folds: int
    criterion_violated: bool
    forced_residual: float
    forced_kind: Optional[FailureKind]


def run_necessity_trial(spec, threshold=1.0, deficit=2):
    """Run two samples below the boundary, first guarded then forced."""
    boundary, _ = boundary_q(spec, threshold)
    num_samples = boundary - deficit
    guarded = run_trial(spec, num_samples, threshold=threshold)
    forced = run_trial(spec, num_samples, threshold=threshold, force=True)
    forced_residual = forced.annihilation_residual
    if math.isnan(forced_residual):
        forced_residual = 0.0
    return NecessityResult(
        num_samples=num_samples,
        realized_folds=guarded.realized_folds,
        criterion_violated=guarded.failure_kind is FailureKind.CRITERION_VIOLATION,
        forced_residual=forced_residual,
        forced_kind=forced.failure_kind,
    )


# -------------------- Sweeps -------------------- #

def derive_seed(seed, cell, trial=0):
    """Independent 64-bit stream per (seed, cell, trial)."""
    sequence = np.random.SeedSequence(seed, spawn_key=(cell, trial))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepGrid:
    amplitude_scales: Sequence[float]
    num_samples: Sequence[int]
    fold_budgets: Sequence[Optional[int]] = (None,)
    alphas: Sequence[float] = (math.pi / 4,)
    bandwidth_indices: Sequence[int] = (2,)
    sigma: float = 1.0
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("amplitude_scales", "num_samples", "fold_budgets", "alphas", "bandwidth_indices"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"❌ sweep grid field {name} is empty", key=name)
        if self.trials < 1:
            raise ConfigError(f"❌ sweep needs at least one trial per cell, got {self.trials}", key="trials")

    def cells(self):
        return list(itertools.product(
            self.alphas, self.bandwidth_indices, self.amplitude_scales, self.num_samples, self.fold_budgets
        ))


CELL_COLUMNS = ["alpha", "bandwidth_index", "amplitude_scale", "num_samples", "budget"]


def _run_task(task):
    cell_index, trial, cell, grid, threshold, rmse_tol, anchor, regularization = task
    alpha, bandwidth_index, beta, num_samples, budget = cell
    seed = derive_seed(grid.seed, cell_index, trial)
    spec = SignalSpec(alpha, grid.sigma, bandwidth_index, beta, seed)
    result = run_trial(spec, num_samples, budget, threshold, rmse_tol, anchor, regularization)
    row = {
        "cell": cell_index,
        "trial": trial,
        "seed": seed,
        "alpha": alpha,
        "bandwidth_index": bandwidth_index,
        "amplitude_scale": beta,
        "budget": "realized" if budget is None else str(budget),
        "threshold": threshold,
    }
    row.update(result.as_row())
    return row


def sweep(grid, threshold=1.0, jobs=1, rmse_tol=1e-6, anchor="mean", regularization=0.0):
    """Run every (cell, trial) of the grid; returns (trials, summary) data frames."""
    tasks = [
        (cell_index, trial, cell, grid, threshold, rmse_tol, anchor, regularization)
        for cell_index, cell in enumerate(grid.cells())
        for trial in range(grid.trials)
    ]
    logger.info("🚀 sweeping %d trials over %d cells with %d worker(s)", len(tasks), len(grid.cells()), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_run_task(task) for task in tasks]

    trials = pd.DataFrame(rows)
    summary = summarize(trials)
    logger.info("✅ sweep finished, overall pass rate %.3f", float(trials["passed"].mean()))
    return trials, summary


def summarize(trials):
    finite = trials.assign(rel_rmse=trials["rel_rmse"].replace([np.inf, -np.inf], np.nan))
    grouped = finite.groupby(CELL_COLUMNS, sort=True)
    summary = grouped.agg(
        trials=("passed", "size"),
        passed=("passed", "sum"),
        mean_realized_folds=("realized_folds", "mean"),
        rmse_median=("rel_rmse", "median"),
        rmse_p90=("rel_rmse", lambda s: s.quantile(0.9)),
        rmse_max=("rel_rmse", "max"),
    ).reset_index()
    summary["pass_rate"] = summary["passed"] / summary["trials"]
    return summary


def pass_rate_series(trials):
    """x = Q, y = pass rate over every other grid axis."""
    series = trials.groupby("num_samples", sort=True)["passed"].mean()
    return series.rename("pass_rate").reset_index()


def rmse_series(trials):
    """x = β, y = median relative RMSE of the passing trials (NaN when none passed)."""
    betas = sorted(trials["amplitude_scale"].unique())
    series = trials[trials["passed"]].groupby("amplitude_scale")["rel_rmse"].median().reindex(betas)
    series.index.name = "amplitude_scale"
    return series.rename("rmse_median").reset_index()
