"""One-vs-all linear SVM with the squared hinge (L2) loss, solved in the primal."""
import time
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from src.classifiers.base import check_training_set, error_percent, freeze_weights, predict
from src.core.errors import ParameterError
from src.core.params import SvmConfig
from src.core.types import FeatureSet, TrainedModel
from src.utils.logging_config import logger
from src.utils.rng import make_rng


def svm_objective(weights: np.ndarray, bias: float, vectors: np.ndarray, signs: np.ndarray, C: float) -> float:
    """(1/2)|w|^2 + C * sum max(0, 1 - y (w.x + b))^2."""
    slack = np.maximum(0.0, 1.0 - signs * (vectors @ weights + bias))
    return 0.5 * float(weights @ weights) + C * float(slack @ slack)


class SquaredHingeProblem:
    """
    Objective, gradient and generalized Hessian-vector product for one binary task.

    The parameter vector is [w, b]; b is not regularized. The Hessian uses
    the active set (samples with positive slack) of the last evaluated point.
    """

    def __init__(self, vectors: np.ndarray, signs: np.ndarray, C: float):
        self.vectors = vectors
        self.signs = signs
        self.C = C
        self._point = None
        self._active = None

    def _margins(self, theta: np.ndarray) -> np.ndarray:
        slack = 1.0 - self.signs * (self.vectors @ theta[:-1] + theta[-1])
        self._point = theta.copy()
        self._active = slack > 0
        return slack

    def value_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        slack = self._margins(theta)
        weights = theta[:-1]
        coefficient = np.where(self._active, slack, 0.0) * self.signs
        value = 0.5 * float(weights @ weights) + self.C * float(coefficient @ coefficient)
        gradient = np.empty_like(theta)
        gradient[:-1] = weights - 2.0 * self.C * (self.vectors.T @ coefficient)
        gradient[-1] = -2.0 * self.C * coefficient.sum()
        return value, gradient

    def value(self, theta: np.ndarray) -> float:
        return self.value_and_gradient(theta)[0]

    def hessian_product(self, theta: np.ndarray, direction: np.ndarray) -> np.ndarray:
        if self._point is None or not np.array_equal(theta, self._point):
            self._margins(theta)
        active = self.vectors[self._active]
        projected = active @ direction[:-1] + direction[-1]
        product = np.empty_like(direction)
        product[:-1] = direction[:-1] + 2.0 * self.C * (active.T @ projected)
        product[-1] = 2.0 * self.C * projected.sum()
        return product


def _fit_binary(vectors: np.ndarray, signs: np.ndarray, config: SvmConfig) -> tuple[np.ndarray, list[float], bool, int]:
    problem = SquaredHingeProblem(vectors, signs, config.C)
    theta = np.zeros(vectors.shape[1] + 1)
    objectives = [problem.value(theta)]
    iterations = 0

    if config.max_iterations > 0:
        result = minimize(
            problem.value_and_gradient,
            theta,
            jac=True,
            hessp=problem.hessian_product,
            method="trust-ncg",
            callback=lambda point: objectives.append(problem.value(point)),
            options={"gtol": config.tolerance, "maxiter": config.max_iterations},
        )
        theta = result.x
        iterations = int(result.nit)

    gradient_norm = float(np.linalg.norm(problem.value_and_gradient(theta)[1]))
    return theta, objectives, gradient_norm <= config.tolerance, iterations


def train_svm(features: FeatureSet, config: SvmConfig) -> TrainedModel:
    """
    Minimize the squared-hinge objective independently for every class vs the rest.

    A trust-region Newton-CG run from w = 0, b = 0; only steps that reduce the
    objective are accepted, so each class's recorded objective sequence never
    increases. No randomness is involved.
    """
    vectors = check_training_set(features)
    started = time.perf_counter()
    dim, class_count = vectors.shape[1], features.class_count

    weights = np.zeros((dim, class_count))
    bias = np.zeros(class_count)
    diagnostics = {"objective": [], "converged": [], "iterations": []}
    for class_id in range(class_count):
        signs = np.where(features.labels == class_id, 1.0, -1.0)
        theta, objectives, converged, iterations = _fit_binary(vectors, signs, config)
        weights[:, class_id], bias[class_id] = theta[:-1], theta[-1]
        diagnostics["objective"].append(objectives)
        diagnostics["converged"].append(converged)
        diagnostics["iterations"].append(iterations)
        logger.debug("svm_class_fitted", class_id=class_id, objective=objectives[-1],
                     converged=converged, iterations=iterations)

    wall_time = time.perf_counter() - started
    logger.info("svm_trained", samples=vectors.shape[0], classes=class_count,
                converged=all(diagnostics["converged"]), wall_time_s=round(wall_time, 3))
    return TrainedModel(
        kind="svm",
        weights=freeze_weights({"weights": weights, "bias": bias}),
        class_count=class_count,
        input_dim=dim,
        metadata={**config.echo("svm."), "wall_time_s": f"{wall_time:.3f}"},
        diagnostics=diagnostics,
    )


def holdout_split(labels: np.ndarray, class_count: int, validation_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified (train, validation) index arrays; each class holds out round(fraction * n_c) samples."""
    train, validation = [], []
    for class_id in range(class_count):
        members = np.flatnonzero(labels == class_id)
        shuffled = make_rng(seed, class_id).permutation(members)
        held = int(round(validation_fraction * members.size))
        validation.append(np.sort(shuffled[:held]))
        train.append(np.sort(shuffled[held:]))
    return np.concatenate(train), np.concatenate(validation)


def select_svm_c(
    features: FeatureSet,
    candidates: Sequence[float],
    config: SvmConfig = None,
    validation_fraction: float = 0.2,
    seed: int = 0,
) -> float:
    """
    Pick C by validation error on a stratified holdout of the training set.

    Ties go to the earliest candidate.
    """
    if not candidates:
        raise ParameterError("at least one C candidate is required")
    if not 0.0 < validation_fraction < 1.0:
        raise ParameterError(f"validation_fraction must lie in (0, 1), got {validation_fraction}")
    config = config or SvmConfig()
    train_rows, validation_rows = holdout_split(features.labels, features.class_count, validation_fraction, seed)
    if validation_rows.size == 0 or train_rows.size == 0:
        raise ParameterError("holdout split left an empty training or validation part")

    def subset(rows):
        return FeatureSet(features.vectors[rows], features.labels[rows], features.class_count, features.standardized)

    fit_part, check_part = subset(train_rows), subset(validation_rows)
    best_c, best_error = None, None
    for C in candidates:
        model = train_svm(fit_part, SvmConfig(C=C, max_iterations=config.max_iterations, tolerance=config.tolerance))
        error = error_percent(predict(model, check_part), check_part.labels)
        logger.info("svm_c_candidate", C=C, validation_error_pct=round(error, 4))
        if best_error is None or error < best_error:
            best_c, best_error = C, error
    return best_c
