import argparse
import logging
import os
import sys

from errors import (
    AnnihilationFailureError,
    ConfigError,
    CriterionViolationError,
    InvalidSignalError,
    ModFrftError,
    SchemaError,
)
from frft_core import as_angle, dtfrft, inverse_dtfrft
from load_config import configure_logging, load_config, parse_run_config
from modulo_adc import FoldedSamples, ModuloParams, count_folds, fold_distance, fold_samples, itoh_check, residual
from reconstruction import SamplingCriterion, check_sampling_criterion, detect_fold_budget, reconstruct
from signal_io import (
    read_signal,
    read_spectrum,
    write_json,
    write_signal,
    write_spectrum,
    write_spikes,
    write_table,
)
from testbench import (
    SignalSpec,
    SweepGrid,
    generate_signal,
    ground_truth_offset,
    pass_rate_series,
    rel_rmse,
    rmse_series,
    sweep,
)

logger = logging.getLogger(__name__)

# -------------------- Helpers -------------------- #

def _output_path(config, name, fmt=None):
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, f"{name}.{fmt}" if fmt else name)


def _complex_payload(value):
    return {"re": float(value.real), "im": float(value.imag)}


def _criterion(config, fold_budget, num_samples):
    return SamplingCriterion.from_bandwidth_index(
        config.bandwidth_index, config.alpha, config.sigma, fold_budget, num_samples
    )


def _run_config(args):
    config = parse_run_config(load_config(args.config))
    return config.with_overrides(
        output_dir=args.out, seed=args.seed, jobs=args.jobs, output_format=args.format
    )


# -------------------- Commands -------------------- #

def cmd_simulate(config, args):
    """Generate ground truth, fold it and write the three sample files plus metadata."""
    spec = SignalSpec(config.alpha, config.sigma, config.bandwidth_index, config.amplitude_scale, config.seed)
    truth, coeffs = generate_signal(spec, config.num_samples, config.threshold)
    folded = fold_samples(truth, ModuloParams(config.threshold))
    v = residual(truth, folded)
    realized = count_folds(v)

    fmt = config.output_format
    write_signal(truth, _output_path(config, "ground_truth", fmt), fmt)
    write_signal(folded.as_signal(), _output_path(config, "folded", fmt), fmt)
    write_signal(truth.with_samples(v.values), _output_path(config, "residual", fmt), fmt)

    budget = realized if config.fold_budget is None else config.fold_budget
    decision = check_sampling_criterion(_criterion(config, budget, config.num_samples))
    write_json({
        "alpha": config.alpha,
        "sigma": config.sigma,
        "bandwidth_index": config.bandwidth_index,
        "threshold": config.threshold,
        "num_samples": config.num_samples,
        "amplitude_scale": config.amplitude_scale,
        "seed": config.seed,
        "realized_folds": realized,
        "itoh_condition": itoh_check(truth, config.threshold),
        "criterion": decision.as_dict(),
        "increment_coefficients": [
            {"w": int(w), **_complex_payload(c)} for w, c in zip(coeffs.signed_indices, coeffs.coeffs)
        ],
    }, _output_path(config, "simulation.json"))

    if not decision.passed:
        logger.warning("⚠️ Q=%d is below the sampling bound %d for M=%d", config.num_samples, decision.minimal_q, budget)
    print(f"✅ simulated Q={config.num_samples} samples, {realized} folds, "
          f"bound Q ≥ {decision.minimal_q} ({'met' if decision.passed else 'violated'})")
    return 0


def _read_folded(path, config):
    signal = read_signal(path, sigma=config.sigma)
    if signal.length != config.num_samples:
        raise SchemaError(
            f"❌ {path} has {signal.length} rows but NUM_SAMPLES is {config.num_samples} (truncated file?)"
        )
    try:
        return FoldedSamples(signal.samples, ModuloParams(config.threshold), signal.sample_period,
                             config.sigma, signal.start)
    except InvalidSignalError as exc:
        raise SchemaError(f"❌ {path} is not a folded record for λ={config.threshold}: {exc}") from exc


def _fold_budget(folded, config):
    if config.fold_budget is not None:
        return config.fold_budget
    try:
        return detect_fold_budget(folded, config.alpha, config.bandwidth_index,
                                  regularization=config.regularization)
    except AnnihilationFailureError as exc:
        # detection tries every M the window supports; more folds need more samples
        window = max(0, config.num_samples - 2 * config.bandwidth_index - 2)
        required = 2 * (config.bandwidth_index + window // 2 + 2)
        raise CriterionViolationError(
            f"❌ no fold budget supported by Q={config.num_samples} explains the record; "
            f"need Q ≥ {required}", required_q=required,
        ) from exc


def cmd_reconstruct(config, args):
    """Unfold a folded record and write recovered samples, spikes and a summary."""
    folded = _read_folded(args.input, config)
    budget = _fold_budget(folded, config)
    criterion = _criterion(config, budget, folded.length)

    report = reconstruct(folded, criterion, anchor=config.offset_anchor, regularization=config.regularization,
                         force=args.force, dense_factor=config.dense_factor)
    diagnostics = report.diagnostics

    fmt = config.output_format
    write_signal(report.recovered, _output_path(config, "recovered", fmt), fmt)
    if report.dense is not None:
        write_signal(report.dense, _output_path(config, "recovered_dense", fmt), fmt)
    write_spikes(report.spikes, config.threshold, _output_path(config, "spikes.json"))

    summary = {
        "num_samples": folded.length,
        "fold_budget": budget,
        "recovered_folds": diagnostics.realized_folds,
        "annihilation_residual": diagnostics.annihilation_residual,
        "criterion": diagnostics.criterion.as_dict(),
        "offset": _complex_payload(report.constant_offset),
        "anchor": diagnostics.anchor,
        "forced": diagnostics.forced,
        "filter_residual": diagnostics.filter_residual,
        "refold_consistent": fold_distance(
            fold_samples(report.recovered, folded.params).samples, folded.samples, config.threshold
        ) <= 1e-9 * max(1.0, config.threshold),
    }
    truth = None
    if args.truth:
        truth = read_signal(args.truth, sigma=config.sigma)
        truth_offset = ground_truth_offset(report.recovered, truth, config.threshold)
        error = rel_rmse(report.recovered.samples + truth_offset, truth)
        summary.update({
            "truth_offset": _complex_payload(truth_offset),
            "rel_rmse": error,
            "passed": error < config.rmse_tolerance,
        })
    write_json(summary, _output_path(config, "summary.json"))

    if args.plots:
        from report import plot_reconstruction

        if truth is not None:
            truth = truth.with_samples(truth.samples - truth_offset)
        plot_reconstruction(folded, report.recovered, _output_path(config, "reconstruction.png"), truth)

    rmse_note = f", rel RMSE {summary['rel_rmse']:.3e}" if "rel_rmse" in summary else ""
    print(f"✅ reconstructed Q={folded.length} samples with {diagnostics.realized_folds} folds, "
          f"residual {diagnostics.annihilation_residual:.3e}{rmse_note}")
    return 0


def cmd_sweep(config, args):
    """Run the configured grid and write trial rows, the per-cell summary and plot series."""
    grid_config = config.sweep
    grid = SweepGrid(
        amplitude_scales=tuple(grid_config.amplitude_scales),
        num_samples=tuple(grid_config.num_samples),
        fold_budgets=tuple(grid_config.fold_budgets),
        alphas=tuple(grid_config.alphas),
        bandwidth_indices=tuple(grid_config.bandwidth_indices),
        sigma=config.sigma,
        trials=grid_config.trials,
        seed=config.seed,
    )
    trials, summary = sweep(grid, config.threshold, config.jobs, config.rmse_tolerance,
                            config.offset_anchor, config.regularization)
    pass_rate = pass_rate_series(trials)
    rmse = rmse_series(trials)

    write_table(trials, _output_path(config, "sweep_trials.csv"))
    write_table(summary, _output_path(config, "sweep_summary.csv"))
    write_table(pass_rate, _output_path(config, "pass_rate_vs_q.csv"))
    write_table(rmse, _output_path(config, "rmse_vs_beta.csv"))

    if args.plots or args.report:
        from report import create_sweep_pdf, plot_pass_rate, plot_rmse

        predicted_q = None
        budgets = grid.fold_budgets
        if len(grid.bandwidth_indices) == 1 and len(budgets) == 1 and budgets[0] is not None:
            predicted_q = 2 * (grid.bandwidth_indices[0] + budgets[0] + 1)
        images = [
            plot_pass_rate(pass_rate, _output_path(config, "pass_rate_vs_q.png"), predicted_q),
            plot_rmse(rmse, _output_path(config, "rmse_vs_beta.png")),
        ]
        if args.report:
            metadata = {
                "Threshold λ": config.threshold,
                "Period σ": config.sigma,
                "Trials per cell": grid.trials,
                "Seed": config.seed,
                "Offset anchor": config.offset_anchor,
                "Overall pass rate": f"{float(trials['passed'].mean()):.3f}",
            }
            create_sweep_pdf(summary, metadata, _output_path(config, "sweep_report.pdf"), images)

    print(f"✅ swept {len(trials)} trials over {len(summary)} cells, "
          f"pass rate {float(trials['passed'].mean()):.3f}")
    return 0


def cmd_frft(config, args):
    """Forward or inverse discrete FRFT of a signal or spectrum file."""
    alpha = config.alpha if args.alpha is None else args.alpha
    angle = as_angle(alpha)
    if angle.is_degenerate:
        kind = "identity" if angle.half_turns % 2 == 0 else "time reversal"
        print(f"⚠️ α={angle.alpha:g} is a multiple of π: the transform reduces to the {kind}")

    fmt = config.output_format
    if args.direction == "forward":
        signal = read_signal(args.input)
        spectrum = dtfrft(signal, angle)
        path = write_spectrum(spectrum, _output_path(config, "frft_forward", fmt), fmt)
        count = spectrum.length
    else:
        spectrum = read_spectrum(args.input, angle)
        signal = inverse_dtfrft(spectrum, angle)
        path = write_signal(signal, _output_path(config, "frft_inverse", fmt), fmt)
        count = signal.length
    print(f"✅ wrote {args.direction} FRFT of {count} samples at α={angle.alpha:g} to {path}")
    return 0


HANDLERS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "frft": cmd_frft,
}


# -------------------- Argument parsing -------------------- #

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: MODFRFT_CONFIG_DATA or config/config.json)")
    common.add_argument("--out", help="output directory, overrides OUTPUT_DIR")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps, overrides JOBS")
    common.add_argument("--seed", type=int, help="RNG seed, overrides SEED")
    common.add_argument("--format", choices=("csv", "json"), help="sample file format, overrides OUTPUT_FORMAT")
    common.add_argument("--plots", action="store_true", help="also write PNG plots")

    parser = argparse.ArgumentParser(
        prog="modfrft",
        description="Modulo sampling and reconstruction of FRFD bandlimited signals.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("simulate", parents=[common], help="generate and fold a synthetic signal")

    rebuild = commands.add_parser("reconstruct", parents=[common], help="unfold a folded record")
    rebuild.add_argument("input", help="folded samples (index,t,re,im)")
    rebuild.add_argument("--truth", help="ground-truth samples for RMSE reporting")
    rebuild.add_argument("--force", action="store_true", help="run even when the sampling bound is violated")

    sweeper = commands.add_parser("sweep", parents=[common], help="run the configured trial grid")
    sweeper.add_argument("--report", action="store_true", help="also write a PDF report")

    transform = commands.add_parser("frft", parents=[common], help="discrete FRFT utility")
    transform.add_argument("input", help="signal (forward) or spectrum (inverse) file")
    transform.add_argument("--alpha", type=float, help="rotation angle in radians, overrides ALPHA")
    transform.add_argument("--direction", choices=("forward", "inverse"), default="forward")
    return parser


def main(argv=None):
    configure_logging()
    args = build_parser().parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        print("❌ --jobs must be ≥ 1", file=sys.stderr)
        return ConfigError.exit_code
    if args.seed is not None and args.seed < 0:
        print("❌ --seed must be ≥ 0", file=sys.stderr)
        return ConfigError.exit_code

    try:
        config = _run_config(args)
        logger.info("🚀 running %s", args.command)
        return HANDLERS[args.command](config, args)
    except ModFrftError as exc:
        logger.error("%s: %s", exc.kind, exc)
        key = getattr(exc, "key", None)
        suffix = f" [{key}]" if key else ""
        print(f"{exc}{suffix}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        logger.error("❌ I/O failure: %s", exc)
        print(f"❌ I/O failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
