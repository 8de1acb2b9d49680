"""Command-line entry point: sweeps, warp previews, feature precompute and reports."""
import argparse
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from src import config as app_config
from src.classifiers.registry import get_classifier_list
from src.core.errors import ParameterError, WarpbenchError
from src.datasets.dataset_io import load_mnist
from src.harness.config_file import build_experiment_config, parse_config_file
from src.harness.experiment import ExperimentConfig
from src.harness.preview import render_warp_preview
from src.harness.recipes import RECIPE_REGISTRY
from src.harness.report import (
    emit_comparison_plot,
    emit_learning_curve_plot,
    read_results_csv,
    trend_report,
    write_results_csv,
    write_summary_csv,
    write_timings_csv,
)
from src.harness.sweep import SweepContext, run_sweep
from src.utils.logging_config import logger, setup_logging

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

AUGMENTED_RECIPES = "elastic,smote,dbsmote"


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value experiment file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--data", type=Path, help="MNIST directory (default: $WARPBENCH_DATA)")
    parser.add_argument("--cache", type=Path, help="cache directory")
    classifiers = ", ".join(f"{c['key']} ({c['name']})" for c in get_classifier_list())
    parser.add_argument("--classifier", help=f"comma list of {classifiers}")
    parser.add_argument("--recipe", help=f"comma list of {', '.join(RECIPE_REGISTRY)}")
    parser.add_argument("--points", help="comma list of samples per class")
    parser.add_argument("--repeats", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--fidelity", action="store_true", help="MLP at 2000 full-batch epochs")
    parser.add_argument("--record-timing", action="store_true", help="write wall times into results.csv")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpbench", description="Data-space vs feature-space augmentation benchmarks")
    commands = parser.add_subparsers(dest="command", required=True)

    _common_flags(commands.add_parser("baseline", help="real-data learning curves"))
    _common_flags(commands.add_parser("augment", help="learning curves with synthetic data"))
    _common_flags(commands.add_parser("features", help="precompute the feature cache"))

    preview = commands.add_parser("warp-preview", help="contact sheet of original vs warped digits")
    _common_flags(preview)
    preview.add_argument("--alpha", default="1.2,8", help="comma list of warp strengths")
    preview.add_argument("--sigma", type=float, help="field smoothness (default from config)")
    preview.add_argument("--count", type=int, default=10, help="digits to show")

    report = commands.add_parser("report", help="plots and summary from a results CSV")
    report.add_argument("--results", type=Path, help="results CSV (default: <out>/results.csv)")
    report.add_argument("--out", type=Path, help="output directory")
    report.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """CLI flags as config values; unset flags leave file values alone."""
    flags = {
        "master_seed": args.seed,
        "out_dir": args.out,
        "data_dir": args.data,
        "cache_dir": args.cache,
        "classifiers": args.classifier,
        "recipes": args.recipe,
        "points": args.points,
        "repeats": args.repeats,
        "threads": args.threads,
    }
    overrides = {key: value for key, value in flags.items() if value is not None}
    if args.record_timing:
        overrides["record_timing"] = True
    if args.fidelity:
        overrides["mlp"] = {"epochs": app_config.FIDELITY_MLP_EPOCHS, "batch_size": "full"}
    return overrides


def load_experiment(args: argparse.Namespace, defaults: dict[str, Any] = None) -> ExperimentConfig:
    """Defaults, then the config file, then CLI flags."""
    file_values = parse_config_file(args.config) if args.config else {}
    base = dict(defaults or {})
    base.update(file_values)
    return build_experiment_config(base, _overrides(args))


def _write_outputs(experiment: ExperimentConfig, results) -> None:
    out = Path(experiment.out_dir)
    write_results_csv(results, out / "results.csv", record_timing=experiment.record_timing)
    write_timings_csv(results, out / "timings.csv")
    write_summary_csv(results, out / "summary.csv")
    emit_learning_curve_plot(results, out / "learning_curves.svg")
    if len(experiment.recipes) > 1:
        emit_comparison_plot(results, out / "comparison.svg")
    for recipe in experiment.recipes:
        trend_report(results, recipe=recipe)


def _run_sweep_command(args, defaults) -> None:
    experiment = load_experiment(args, defaults)
    results = run_sweep(experiment)
    _write_outputs(experiment, results)


def _features_command(args) -> None:
    experiment = load_experiment(args)
    train, test = load_mnist(experiment.data_dir)
    context = SweepContext(experiment, train, test)
    for repeat in range(experiment.repeats):
        context.baseline_features(experiment.points[-1], repeat)
        if "elastic" in experiment.recipes and experiment.points[-1] > experiment.real_pool_per_class:
            context.warped_features(experiment.points[-1], repeat)
        context.release(repeat)
    if any(recipe != "baseline" for recipe in experiment.recipes):
        context.pool_features()
    logger.info("feature_cache_ready", hits=context.cache.hits, misses=context.cache.misses,
                cache_dir=str(experiment.cache_dir))


def _preview_command(args) -> None:
    experiment = load_experiment(args)
    try:
        alphas = [float(part) for part in args.alpha.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--alpha: {e}") from e
    sigma = args.sigma if args.sigma is not None else experiment.elastic.sigma
    train, _ = load_mnist(experiment.data_dir)

    # First sample of each class in turn, so every digit shows up
    firsts = [np.flatnonzero(train.labels == c)[:args.count] for c in range(train.class_count)]
    order = [int(idx[i]) for i in range(args.count) for idx in firsts if i < idx.size][:args.count]
    render_warp_preview(train.images[order], alphas, sigma, experiment.master_seed,
                        Path(experiment.out_dir) / "warp_preview.png")


def _report_command(args) -> None:
    out = Path(args.out) if args.out else app_config.OUTPUT_DIR
    results = read_results_csv(args.results or out / "results.csv")
    write_summary_csv(results, out / "summary.csv")
    emit_learning_curve_plot(results, out / "learning_curves.svg")
    emit_comparison_plot(results, out / "comparison.svg")
    for recipe in dict.fromkeys(r.recipe for r in results):
        trend_report(results, recipe=recipe)


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 2 on a usage error or invalid parameter, 1 on a runtime error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.log_level:
        setup_logging(args.log_level)

    try:
        if args.command == "baseline":
            _run_sweep_command(args, {"recipes": "baseline"})
        elif args.command == "augment":
            _run_sweep_command(args, {"recipes": AUGMENTED_RECIPES})
        elif args.command == "features":
            _features_command(args)
        elif args.command == "warp-preview":
            _preview_command(args)
        elif args.command == "report":
            _report_command(args)
    except (argparse.ArgumentTypeError, ParameterError) as e:
        parser.print_usage(sys.stderr)
        print(f"warpbench: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (WarpbenchError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"warpbench: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    logger.info("command_finished", command=args.command)
    return EXIT_OK
