import math

import numpy as np
import pytest

from errors import CriterionViolationError, EstimationError, InvalidCriterionError, LengthMismatchError
from frft_core import ComplexSignal, FrfsCoefficients, frfs_synthesize
from modulo_adc import ModuloParams, count_folds, fold_samples, residual
from reconstruction import (
    SamplingCriterion,
    align_constant,
    check_sampling_criterion,
    detect_fold_budget,
    reconstruct,
    recover_continuous,
    recover_residual,
    recover_samples,
    resynthesize_increments,
)
from testbench import SignalSpec, boundary_q, generate_signal

ALPHA = math.pi / 4


def period_grid(sigma, num_samples):
    return -0.5 * sigma + np.arange(num_samples) * (sigma / num_samples)


def _folded_scenario(beta=3.0, bandwidth_index=2, seed=0, num_samples=None, threshold=1.0):
    spec = SignalSpec(ALPHA, 1.0, bandwidth_index, beta, seed)
    if num_samples is None:
        num_samples, _ = boundary_q(spec, threshold)
    truth, _ = generate_signal(spec, num_samples, threshold)
    folded = fold_samples(truth, ModuloParams(threshold))
    return spec, truth, folded, count_folds(residual(truth, folded))


def _bandlimited(rng, order=2, num_samples=32, sigma=1.0, alpha=ALPHA):
    size = 2 * order + 1
    coeffs = FrfsCoefficients(rng.normal(size=size) + 1j * rng.normal(size=size), order, sigma, alpha)
    return coeffs, frfs_synthesize(coeffs, alpha, period_grid(sigma, num_samples))


# -------------------- Criterion -------------------- #

def test_criterion_at_the_boundary():
    decision = check_sampling_criterion(SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, 3, 12))
    assert decision.passed
    assert decision.bandwidth_index == 2
    assert decision.minimal_q == 12
    assert decision.window_length == 6
    assert decision.slack == 0
    assert decision.max_sample_period == pytest.approx(1.0 / 12)


def test_criterion_one_sample_short():
    decision = check_sampling_criterion(SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, 3, 11))
    assert not decision.passed
    assert decision.slack == -1
    assert decision.as_dict()["minimal_q"] == 12


def test_criterion_bandwidth_from_omega():
    omega = 2.0 * math.pi * math.sin(ALPHA) * 3 / 2.0
    criterion = SamplingCriterion(omega, 2.0, ALPHA, 1, 20)
    assert criterion.bandwidth_index == 3
    assert criterion.sample_period == pytest.approx(0.1)
    assert check_sampling_criterion(criterion.with_budget(5)).minimal_q == 18


@pytest.mark.parametrize("kwargs", [
    dict(omega_alpha=1.0, sigma=1.0, alpha=ALPHA, fold_budget=1, num_samples=10, sample_period=0.2),
    dict(omega_alpha=1.0, sigma=0.0, alpha=ALPHA, fold_budget=1, num_samples=10),
    dict(omega_alpha=1.0, sigma=1.0, alpha=ALPHA, fold_budget=-1, num_samples=10),
    dict(omega_alpha=-1.0, sigma=1.0, alpha=ALPHA, fold_budget=1, num_samples=10),
])
def test_criterion_rejects_invalid_inputs(kwargs):
    with pytest.raises(InvalidCriterionError):
        SamplingCriterion(**kwargs)


@pytest.mark.parametrize("bandwidth_index", [0, 2, 5])
@pytest.mark.parametrize("fold_budget", [0, 1, 4])
def test_slack_grows_with_q(bandwidth_index, fold_budget):
    decisions = [
        check_sampling_criterion(SamplingCriterion.from_bandwidth_index(bandwidth_index, ALPHA, 1.0, fold_budget, q))
        for q in range(2, 40)
    ]
    assert all(later.slack - earlier.slack == 1 for earlier, later in zip(decisions, decisions[1:]))
    passed = [decision.passed for decision in decisions]
    assert passed == sorted(passed)
    assert all(decision.passed == (decision.num_samples >= decision.minimal_q) for decision in decisions)


# -------------------- Pipeline stages -------------------- #

def test_unfolded_record_is_returned_unchanged():
    _, truth, folded, folds = _folded_scenario(beta=0.5, num_samples=32)
    assert folds == 0
    estimate = recover_residual(folded, ALPHA, 2, 0)
    assert estimate.spikes.count == 0
    report = reconstruct(folded, SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, 0, 32))
    np.testing.assert_array_equal(report.recovered.samples, truth.samples)
    assert report.constant_offset == 0


def test_residual_recovery_matches_truth():
    _, truth, folded, folds = _folded_scenario(beta=3.0, num_samples=48)
    estimate = recover_residual(folded, ALPHA, 2, folds)
    expected = residual(truth, folded).values
    shift = expected[0]
    np.testing.assert_allclose(estimate.residual.values + shift, expected, rtol=0, atol=1e-9)
    assert estimate.spikes.count == folds
    assert estimate.annihilation_residual < 1e-6


def test_missing_budget_fails_estimation():
    _, _, folded, folds = _folded_scenario(beta=3.0, num_samples=48)
    assert folds > 0
    with pytest.raises(EstimationError):
        recover_residual(folded, ALPHA, 2, 0)


def test_overestimated_budget_still_recovers():
    _, truth, folded, folds = _folded_scenario(beta=1.5, num_samples=64)
    estimate = recover_residual(folded, ALPHA, 2, folds + 2)
    assert estimate.spikes.count == folds


def test_detect_fold_budget_finds_realized_folds():
    _, _, folded, folds = _folded_scenario(beta=3.0, num_samples=48)
    assert detect_fold_budget(folded, ALPHA, 2) == folds


def test_recover_samples_checks_length():
    _, _, folded, _ = _folded_scenario(beta=0.5, num_samples=16)
    with pytest.raises(LengthMismatchError):
        recover_samples(folded, np.zeros(15))


# -------------------- Constant alignment -------------------- #

def test_mean_anchor_rounds_onto_the_lattice(rng):
    _, signal = _bandlimited(rng)
    shifted = signal.with_samples(signal.samples - np.mean(signal.samples) + 5.3 - 0.4j)
    aligned, offset = align_constant(shifted, 1.0)
    assert offset == -6.0 + 0j
    np.testing.assert_allclose(aligned.samples, shifted.samples - 6.0)


def test_first_anchor_wraps_the_first_sample(rng):
    _, signal = _bandlimited(rng)
    samples = signal.samples - signal.samples[0] + 0.3 + 0.2j + (4.0 - 2.0j)
    aligned, offset = align_constant(signal.with_samples(samples), 1.0, "first")
    assert offset == pytest.approx(-4.0 + 2.0j)
    assert aligned.samples[0] == pytest.approx(0.3 + 0.2j)


def test_unknown_anchor():
    with pytest.raises(ValueError):
        align_constant(None, 1.0, "median")
    with pytest.raises(ValueError):
        align_constant(None, 1.0, "band")


def test_recover_continuous_resynthesizes_the_series(rng):
    coeffs, signal = _bandlimited(rng, order=3, num_samples=24)
    dense_grid = np.linspace(-0.5, 0.5, 97)
    dense = recover_continuous(signal, ALPHA, 3, dense_grid)
    expected = frfs_synthesize(coeffs, ALPHA, dense_grid)
    np.testing.assert_allclose(dense.samples, expected.samples, rtol=0, atol=1e-10)

    same_grid = recover_continuous(signal, ALPHA, 3, signal.times)
    np.testing.assert_allclose(same_grid.samples, signal.samples, rtol=0, atol=1e-8)
    silent = recover_continuous(signal.with_samples(np.zeros(24)), ALPHA, 3, dense_grid)
    assert not np.any(silent.samples)


# -------------------- End to end -------------------- #

@pytest.mark.parametrize("seed", range(5))
def test_reconstruct_at_the_boundary(seed):
    spec, truth, folded, folds = _folded_scenario(beta=3.0, seed=seed)
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, folds, folded.length)
    report = reconstruct(folded, criterion)
    step = 2.0
    gap = np.mean(truth.samples - report.recovered.samples)
    lattice_gap = step * complex(round(gap.real / step), round(gap.imag / step))
    np.testing.assert_allclose(report.recovered.samples + lattice_gap, truth.samples, rtol=0, atol=1e-9)
    assert report.diagnostics.realized_folds == folds
    assert report.diagnostics.criterion.passed


@pytest.mark.parametrize("seed", range(10))
def test_mean_anchor_recovers_the_zero_mean_signal(seed):
    _, truth, folded, folds = _folded_scenario(beta=3.0, seed=seed, num_samples=48)
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, folds, 48)
    report = reconstruct(folded, criterion, anchor="mean")
    np.testing.assert_allclose(report.recovered.samples, truth.samples, rtol=0, atol=1e-9)
    assert report.diagnostics.anchor == "mean"


@pytest.mark.parametrize("seed", range(10))
def test_first_anchor_keeps_the_first_measurement(seed):
    _, truth, folded, folds = _folded_scenario(beta=3.0, seed=seed, num_samples=48)
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, folds, 48)
    report = reconstruct(folded, criterion, anchor="first")
    recovered = report.recovered.samples
    assert recovered[0] == pytest.approx(folded.samples[0], abs=1e-12)
    np.testing.assert_allclose(recovered - truth.samples, folded.samples[0] - truth.samples[0], rtol=0, atol=1e-9)
    assert report.constant_offset == 0


def _dft_unfold(h, bandwidth_index, fold_budget, threshold):
    """Quarter-turn unfolding with a plain FFT and numpy least squares."""
    diffs = np.diff(h)
    length = diffs.size
    n = np.arange(bandwidth_index + 1, length - bandwidth_index)
    y = -np.fft.fft(diffs)[n]
    rows = np.array([y[r - fold_budget:r][::-1] for r in range(fold_budget, y.size)])
    taps = np.linalg.lstsq(rows, -y[fold_budget:], rcond=None)[0]
    roots = np.roots(np.concatenate([[1.0], taps]))
    instants = np.unique(np.mod(np.round(-np.angle(roots) * length / (2 * math.pi)), length).astype(int))
    modes = np.exp(-2j * math.pi * np.outer(n, instants) / length)
    weights = np.linalg.lstsq(modes, y, rcond=None)[0]
    step = 2.0 * threshold
    spikes = np.zeros(length, dtype=np.complex128)
    spikes[instants] = step * (np.round(weights.real / step) + 1j * np.round(weights.imag / step))
    unfolded = h + np.concatenate([[0.0], np.cumsum(spikes)])
    gap = -np.mean(unfolded)
    return unfolded + step * (np.round(gap.real / step) + 1j * np.round(gap.imag / step))


@pytest.mark.parametrize("seed", range(5))
def test_quarter_turn_matches_dft_unfolding(seed):
    spec = SignalSpec(math.pi / 2, 1.0, 2, 3.0, seed)
    num_samples, _ = boundary_q(spec)
    truth, _ = generate_signal(spec, num_samples)
    folded = fold_samples(truth, ModuloParams(1.0))
    folds = count_folds(residual(truth, folded))
    criterion = SamplingCriterion.from_bandwidth_index(2, math.pi / 2, 1.0, folds, num_samples)
    report = reconstruct(folded, criterion)
    expected = _dft_unfold(folded.samples, 2, folds, 1.0)
    np.testing.assert_allclose(report.recovered.samples, expected, rtol=0, atol=1e-9)
    np.testing.assert_allclose(report.recovered.samples, truth.samples, rtol=0, atol=1e-9)


def test_reconstruct_guards_the_criterion():
    spec, _, folded, folds = _folded_scenario(beta=3.0)
    short = folded.length - 2
    truth, _ = generate_signal(spec, short)
    short_folded = fold_samples(truth, ModuloParams(1.0))
    budget = count_folds(residual(truth, short_folded))
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, budget, short)
    with pytest.raises(CriterionViolationError) as info:
        reconstruct(short_folded, criterion)
    assert info.value.required_q == 2 * (2 + budget + 1)
    assert str(info.value.required_q) in str(info.value)

    try:
        report = reconstruct(short_folded, criterion, force=True)
    except EstimationError:
        pass
    else:
        assert report.diagnostics.forced


def test_reconstruct_checks_length():
    _, _, folded, _ = _folded_scenario(beta=0.5, num_samples=16)
    with pytest.raises(LengthMismatchError):
        reconstruct(folded, SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, 0, 18))


@pytest.mark.parametrize("dense_factor", [2, 5])
def test_dense_resynthesis_passes_through_the_samples(dense_factor):
    _, _, folded, folds = _folded_scenario(beta=3.0, num_samples=48)
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, folds, 48)
    report = reconstruct(folded, criterion, dense_factor=dense_factor)
    dense = report.dense
    assert dense.length == 47 * dense_factor + 1
    assert dense.sample_period == pytest.approx(folded.sample_period / dense_factor)
    assert dense.start == report.recovered.start
    np.testing.assert_allclose(dense.samples[::dense_factor], report.recovered.samples, rtol=0, atol=1e-9)


def test_dense_resynthesis_follows_a_bandlimited_increment(rng):
    sample_period, count, dense_factor = 1.0 / 32, 31, 4
    coeffs = FrfsCoefficients(rng.normal(size=5) + 1j * rng.normal(size=5), 2, count * sample_period, ALPHA)
    fine_grid = np.arange(count * dense_factor) * (sample_period / dense_factor)
    fine_steps = frfs_synthesize(coeffs, ALPHA, fine_grid).samples / dense_factor
    fine = np.concatenate([[0.0], np.cumsum(fine_steps)])
    signal = ComplexSignal(fine[::dense_factor], sample_period, 1.0, -0.5)
    dense = resynthesize_increments(signal, ALPHA, 2, dense_factor)
    np.testing.assert_allclose(dense.samples[::dense_factor], signal.samples, rtol=0, atol=1e-9)
    assert np.max(np.abs(dense.samples - fine)) < 0.1 * np.max(np.abs(fine))


def test_dense_factor_one_returns_the_samples():
    _, truth, _, _ = _folded_scenario(beta=3.0, num_samples=48)
    dense = resynthesize_increments(truth, ALPHA, 2, 1)
    np.testing.assert_allclose(dense.samples, truth.samples, rtol=0, atol=1e-9)
    with pytest.raises(ValueError):
        resynthesize_increments(truth, ALPHA, 2, 0)


def test_regularized_solve_passes():
    _, truth, folded, folds = _folded_scenario(beta=3.0, num_samples=48)
    criterion = SamplingCriterion.from_bandwidth_index(2, ALPHA, 1.0, folds, 48)
    report = reconstruct(folded, criterion, regularization=1e-12)
    assert report.diagnostics.realized_folds == folds
