"""Result tables, trend summaries and learning-curve plots."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.core.errors import FormatError, IoError, ParameterError  # noqa: E402
from src.harness.experiment import ExperimentResult  # noqa: E402
from src.utils.logging_config import logger  # noqa: E402

RESULT_COLUMNS = (
    "classifier",
    "recipe",
    "n_per_class",
    "repeat",
    "seed",
    "train_error_pct",
    "test_error_pct",
    "wall_time_s",
)
SUMMARY_COLUMNS = (
    "classifier",
    "recipe",
    "n_per_class",
    "repeats",
    "train_error_mean",
    "train_error_std",
    "test_error_mean",
    "test_error_std",
    "gap_mean",
)

# Fixed SVG ids and no date stamp keep plot bytes stable
_SVG_RC = {"svg.hashsalt": "warpbench", "svg.fonttype": "none"}
_SVG_METADATA = {"Date": None}


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _write_rows(path: Path, header, rows) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_results_csv(results: list[ExperimentResult], path: Path, record_timing: bool = False) -> None:
    """
    One row per result, numbers with 4 decimals.

    wall_time_s is written as 0.0000 unless record_timing is set, so equal
    runs produce identical files; real timings go to the log and timings.csv.
    """
    if not results:
        raise ParameterError("no results to write")
    rows = [
        (
            r.classifier,
            r.recipe,
            r.n_per_class,
            r.repeat,
            r.seed,
            _fmt(r.train_error_percent),
            _fmt(r.test_error_percent),
            _fmt(r.wall_time_s if record_timing else 0.0),
        )
        for r in results
    ]
    _write_rows(path, RESULT_COLUMNS, rows)
    logger.info("results_written", path=str(path), rows=len(rows))


def write_timings_csv(results: list[ExperimentResult], path: Path) -> None:
    rows = [(r.classifier, r.recipe, r.n_per_class, r.repeat, _fmt(r.wall_time_s)) for r in results]
    _write_rows(path, ("classifier", "recipe", "n_per_class", "repeat", "wall_time_s"), rows)


def read_results_csv(path: Path) -> list[ExperimentResult]:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
                raise FormatError(f"{path}: unexpected columns {reader.fieldnames}")
            rows = list(reader)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e

    try:
        return [
            ExperimentResult(
                classifier=row["classifier"],
                recipe=row["recipe"],
                n_per_class=int(row["n_per_class"]),
                repeat=int(row["repeat"]),
                seed=int(row["seed"]),
                train_error_percent=float(row["train_error_pct"]),
                test_error_percent=float(row["test_error_pct"]),
                wall_time_s=float(row["wall_time_s"]),
            )
            for row in rows
        ]
    except (TypeError, ValueError) as e:
        raise FormatError(f"{path}: malformed row: {e}") from e


def _group(results: list[ExperimentResult]) -> dict[tuple[str, str, int], list[ExperimentResult]]:
    groups = defaultdict(list)
    for r in results:
        groups[(r.classifier, r.recipe, r.n_per_class)].append(r)
    return groups


def summarize_results(results: list[ExperimentResult]) -> list[dict]:
    """
    Mean and standard deviation over repeats per (classifier, recipe, n).

    Returns:
        Rows in first-seen order, each with the SUMMARY_COLUMNS keys.
    """
    summary = []
    for (classifier, recipe, n), group in _group(results).items():
        train = np.array([r.train_error_percent for r in group])
        test = np.array([r.test_error_percent for r in group])
        summary.append({
            "classifier": classifier,
            "recipe": recipe,
            "n_per_class": n,
            "repeats": len(group),
            "train_error_mean": float(train.mean()),
            "train_error_std": float(train.std()),
            "test_error_mean": float(test.mean()),
            "test_error_std": float(test.std()),
            "gap_mean": float((test - train).mean()),
        })
    return summary


def write_summary_csv(results: list[ExperimentResult], path: Path) -> None:
    rows = [
        [row[c] if isinstance(row[c], (str, int)) else _fmt(row[c]) for c in SUMMARY_COLUMNS]
        for row in summarize_results(results)
    ]
    _write_rows(path, SUMMARY_COLUMNS, rows)


def trend_report(results: list[ExperimentResult], recipe: str = "baseline") -> dict[str, dict[str, float]]:
    """
    Per classifier: mean test error and gap at the smallest and largest point.

    Returns:
        {classifier: {"n_small", "n_large", "test_small", "test_large",
        "gap_small", "gap_large", "improved"}}, improved being 1.0 when
        test error fell from the smallest to the largest point.
    """
    by_classifier = defaultdict(dict)
    for row in summarize_results([r for r in results if r.recipe == recipe]):
        by_classifier[row["classifier"]][row["n_per_class"]] = row

    report = {}
    for classifier, points in by_classifier.items():
        small, large = points[min(points)], points[max(points)]
        report[classifier] = {
            "n_small": float(small["n_per_class"]),
            "n_large": float(large["n_per_class"]),
            "test_small": small["test_error_mean"],
            "test_large": large["test_error_mean"],
            "gap_small": small["gap_mean"],
            "gap_large": large["gap_mean"],
            "improved": float(large["test_error_mean"] < small["test_error_mean"]),
        }
        logger.info("baseline_trend", classifier=classifier, recipe=recipe, **report[classifier])
    return report


def _curves(results: list[ExperimentResult]):
    """(x, mean train, mean test) per (classifier, recipe), in first-seen order."""
    series = defaultdict(list)
    for row in summarize_results(results):
        series[(row["classifier"], row["recipe"])].append(row)
    curves = {}
    for key, rows in series.items():
        rows.sort(key=lambda row: row["n_per_class"])
        curves[key] = (
            [row["n_per_class"] for row in rows],
            [row["train_error_mean"] for row in rows],
            [row["test_error_mean"] for row in rows],
        )
    return curves


def _draw(ax, x, train, test, label: str, gid: str, color: str) -> None:
    ax.plot(x, train, linestyle="--", marker="o", color=color, label=f"{label} train", gid=f"train-curve-{gid}")
    ax.plot(x, test, linestyle="-", marker="o", color=color, label=f"{label} test", gid=f"test-curve-{gid}")


def _save(fig, path: Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)


def emit_learning_curve_plot(results: list[ExperimentResult], path: Path) -> None:
    """
    One panel per (classifier, recipe): mean error % vs samples per class.

    Training error is dashed, test error solid.
    """
    if not results:
        raise ParameterError("no results to plot")
    curves = _curves(results)
    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(len(curves), 1, figsize=(6.0, 3.2 * len(curves)), squeeze=False)
        for ax, ((classifier, recipe), (x, train, test)) in zip(axes[:, 0], curves.items()):
            _draw(ax, x, train, test, classifier, f"{classifier}-{recipe}", "C0")
            ax.set_title(f"{classifier} / {recipe}")
            ax.set_xlabel("samples per class")
            ax.set_ylabel("error %")
            ax.grid(True, alpha=0.3)
            ax.legend()
        fig.tight_layout()
        _save(fig, path)
    logger.info("plot_written", path=str(path), panels=len(curves))


def emit_comparison_plot(results: list[ExperimentResult], path: Path) -> None:
    """One panel per classifier with every recipe overlaid."""
    if not results:
        raise ParameterError("no results to plot")
    curves = _curves(results)
    classifiers = list(dict.fromkeys(classifier for classifier, _ in curves))
    recipes = list(dict.fromkeys(recipe for _, recipe in curves))
    with plt.rc_context(_SVG_RC):
        fig, axes = plt.subplots(len(classifiers), 1, figsize=(6.0, 3.6 * len(classifiers)), squeeze=False)
        for ax, classifier in zip(axes[:, 0], classifiers):
            for recipe in recipes:
                if (classifier, recipe) not in curves:
                    continue
                x, train, test = curves[(classifier, recipe)]
                _draw(ax, x, train, test, recipe, f"{classifier}-{recipe}", f"C{recipes.index(recipe)}")
            ax.set_title(classifier)
            ax.set_xlabel("samples per class")
            ax.set_ylabel("error %")
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize="small")
        fig.tight_layout()
        _save(fig, path)
    logger.info("plot_written", path=str(path), panels=len(classifiers))
