"""Learning-curve sweeps over (classifier, recipe, sample count, repeat)."""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from src.classifiers.base import error_percent, predict
from src.classifiers.registry import get_classifier
from src.classifiers.svm import select_svm_c
from src.core.errors import ConsistencyError, RunContextError, WarpbenchError
from src.core.params import ClassBalanceSpec
from src.core.types import FeatureSet, LabeledImageSet
from src.datasets.dataset_io import balanced_indices, load_mnist
from src.features.stage import apply_standardizer, default_filter_bank, load_filter_bank, standardize
from src.harness.cache import FeatureCache, warped_images
from src.harness.experiment import ExperimentConfig, ExperimentResult
from src.harness.recipes import RECIPE_REGISTRY
from src.utils.logging_config import logger
from src.utils.rng import derive_seed

# Independent seed streams under the master seed
_BASELINE_STREAM = 1
_POOL_STREAM = 2
_WARP_STREAM = 3


def cell_seed(master_seed: int, point: int, repeat: int) -> int:
    return derive_seed(master_seed, point, repeat)


class SweepContext:
    """
    Shared data for one sweep: the training source, test features and the
    per-repeat real and warped feature blocks the recipes slice from.
    """

    def __init__(self, config: ExperimentConfig, train: LabeledImageSet, test: LabeledImageSet):
        self.config = config
        self.train = train
        stage = config.features
        bank = (
            load_filter_bank(stage.filter_bank_path)
            if stage.filter_bank_path
            else default_filter_bank(stage.filter_size, stage.filter_count, stage.filter_seed)
        )
        self.cache = FeatureCache(bank, stage.pooling, config.cache_dir)
        self.test_features = self.cache.features(test)
        self._pool: Optional[FeatureSet] = None
        self._pool_set: Optional[LabeledImageSet] = None
        self._baseline: dict[int, tuple[np.ndarray, FeatureSet]] = {}
        self._warped: dict[int, FeatureSet] = {}

    @property
    def max_point(self) -> int:
        return self.config.points[-1]

    def pool_set(self) -> LabeledImageSet:
        """The fixed real pool shared by every augmented recipe, point and repeat."""
        if self._pool_set is None:
            spec = ClassBalanceSpec(
                per_class_count=self.config.real_pool_per_class,
                seed=derive_seed(self.config.master_seed, _POOL_STREAM),
            )
            self._pool_set = self.train.take(balanced_indices(self.train, spec))
        return self._pool_set

    def pool_features(self) -> FeatureSet:
        if self._pool is None:
            self._pool = self.cache.features(self.pool_set())
        return self._pool

    def baseline_features(self, point: int, repeat: int) -> FeatureSet:
        # Subsets nest for a fixed seed: extract once at the largest point, then slice.
        seed = derive_seed(self.config.master_seed, _BASELINE_STREAM, repeat)
        if repeat not in self._baseline:
            largest = balanced_indices(self.train, ClassBalanceSpec(per_class_count=self.max_point, seed=seed))
            self._baseline[repeat] = (largest, self.cache.features(self.train.take(largest), keep=False))
        largest, features = self._baseline[repeat]
        chosen = balanced_indices(self.train, ClassBalanceSpec(per_class_count=point, seed=seed))
        return _rows(features, np.flatnonzero(np.isin(largest, chosen)))

    def warped_features(self, point: int, repeat: int) -> FeatureSet:
        """The first (point - pool) warped samples of every class."""
        pool_size = self.config.real_pool_per_class
        if repeat not in self._warped:
            synthetic = warped_images(
                self.pool_set(),
                self.max_point - pool_size,
                self.config.elastic,
                self.config.affine_ranges if self.config.affine else None,
                derive_seed(self.config.master_seed, _WARP_STREAM, repeat),
                self.config.cache_dir,
            )
            self._warped[repeat] = self.cache.features(synthetic, keep=False)
        features = self._warped[repeat]
        per_class = self.max_point - pool_size
        wanted = point - pool_size
        rows = np.concatenate([
            np.arange(c * per_class, c * per_class + wanted) for c in range(features.class_count)
        ])
        return _rows(features, rows)

    def release(self, repeat: int) -> None:
        """Drop the per-repeat feature blocks once every cell of the repeat is done."""
        self._baseline.pop(repeat, None)
        self._warped.pop(repeat, None)


def _rows(features: FeatureSet, rows: np.ndarray) -> FeatureSet:
    return FeatureSet(features.vectors[rows], features.labels[rows], features.class_count, features.standardized)


def _classifier_config(config: ExperimentConfig, kind: str, seed: int, train: FeatureSet):
    base = config.classifier_config(kind)
    entry = get_classifier(kind)
    if entry.uses_seed:
        return entry.config_class(**{**base.model_dump(), "seed": seed})
    if kind == "svm" and config.svm_c_candidates:
        chosen = select_svm_c(train, config.svm_c_candidates, base, seed=seed)
        return entry.config_class(**{**base.model_dump(), "C": chosen})
    return base


def _run_cell(config, kind, recipe, point, repeat, seed, train, test) -> ExperimentResult:
    log = logger.bind(classifier=kind, recipe=recipe, n_per_class=point, repeat=repeat, seed=seed)
    started = time.perf_counter()
    try:
        classifier_config = _classifier_config(config, kind, seed, train)
        model = get_classifier(kind).trainer(train, classifier_config)
        train_error = error_percent(predict(model, train), train.labels)
        test_error = error_percent(predict(model, test), test.labels)
    except WarpbenchError as e:
        raise RunContextError(e, classifier=kind, recipe=recipe, n_per_class=point, repeat=repeat, seed=seed) from e
    wall_time = time.perf_counter() - started

    log.info("sweep_cell_finished", train_error_pct=round(train_error, 4),
             test_error_pct=round(test_error, 4), wall_time_s=round(wall_time, 3))
    echo = {**classifier_config.echo(f"{kind}."), **RECIPE_REGISTRY[recipe].describe(config)}
    return ExperimentResult(
        classifier=kind,
        recipe=recipe,
        n_per_class=point,
        repeat=repeat,
        seed=seed,
        train_error_percent=train_error,
        test_error_percent=test_error,
        wall_time_s=wall_time,
        config_echo=echo,
    )


def grid(config: ExperimentConfig) -> list[tuple[str, str, int, int]]:
    """Result order: classifier, recipe, sample count, repeat."""
    return [
        (kind, recipe, point, repeat)
        for kind in config.classifiers
        for recipe in config.recipes
        for point in config.points
        for repeat in range(config.repeats)
    ]


def run_sweep(config: ExperimentConfig, datasets: tuple[LabeledImageSet, LabeledImageSet] = None) -> list[ExperimentResult]:
    """
    Run every (classifier, recipe, point, repeat) cell.

    Training sets are built once per (repeat, recipe, point) and shared by
    the classifiers, which train concurrently on up to config.threads
    threads. Results come back in grid order whatever the completion order.
    """
    train, test = datasets if datasets is not None else load_mnist(config.data_dir)
    context = SweepContext(config, train, test)
    order = {cell: index for index, cell in enumerate(grid(config))}
    results: dict[int, ExperimentResult] = {}
    sweep_started = time.perf_counter()

    logger.info("sweep_started", classifiers=config.classifiers, recipes=config.recipes,
                points=config.points, repeats=config.repeats, master_seed=config.master_seed,
                threads=config.threads)

    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        for repeat in range(config.repeats):
            for recipe in config.recipes:
                for point in config.points:
                    seed = cell_seed(config.master_seed, point, repeat)
                    try:
                        raw_train, standardizer = RECIPE_REGISTRY[recipe].build(context, point, repeat, seed)
                    except WarpbenchError as e:
                        raise RunContextError(e, recipe=recipe, n_per_class=point, repeat=repeat, seed=seed) from e

                    expected = point * raw_train.class_count
                    if len(raw_train) != expected or np.any(raw_train.class_histogram() != point):
                        raise ConsistencyError(
                            f"recipe {recipe} built {len(raw_train)} vectors at n={point}, expected {expected}"
                        )

                    if standardizer is None:
                        _, (train_set, test_set) = standardize(raw_train, context.test_features)
                    else:
                        train_set, test_set = raw_train, apply_standardizer(standardizer, context.test_features)

                    futures = {
                        order[(kind, recipe, point, repeat)]: executor.submit(
                            _run_cell, config, kind, recipe, point, repeat, seed, train_set, test_set
                        )
                        for kind in config.classifiers
                    }
                    for index, future in futures.items():
                        results[index] = future.result()
            context.release(repeat)

    logger.info("sweep_finished", cells=len(results), wall_time_s=round(time.perf_counter() - sweep_started, 3))
    return [results[index] for index in sorted(results)]
