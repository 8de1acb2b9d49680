"""Extreme learning machine: fixed random sigmoid projection with a ridge readout."""
import time
import warnings

import numpy as np
import scipy.linalg
from scipy.special import expit

from src.classifiers.base import check_training_set, freeze_weights, one_hot
from src.core.errors import SolverError
from src.core.params import ElmConfig
from src.core.types import FeatureSet, TrainedModel
from src.utils.logging_config import logger
from src.utils.rng import make_rng


def random_projection(input_dim: int, hidden_units: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal hidden weights (D, H) and biases (H,), drawn once in float32 and never trained."""
    rng = make_rng(seed)
    weights = rng.standard_normal((input_dim, hidden_units), dtype=np.float32)
    bias = rng.standard_normal(hidden_units, dtype=np.float32)
    return weights.astype(np.float64), bias.astype(np.float64)


def solve_readout(hidden: np.ndarray, targets: np.ndarray, ridge: float) -> np.ndarray:
    """
    Solve (H^T H + ridge I) beta = H^T T.

    Raises:
        SolverError: the system is singular or too ill-conditioned to trust
    """
    gram = hidden.T @ hidden
    if ridge:
        gram[np.diag_indices_from(gram)] += ridge
    rhs = hidden.T @ targets
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(gram, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
        advice = " use ridge > 0" if ridge == 0 else " increase ridge"
        raise SolverError(f"ELM readout system could not be solved ({e});{advice}") from e


def train_elm(features: FeatureSet, config: ElmConfig) -> TrainedModel:
    """h = sigmoid(W x + b) with fixed random W, b; readout by ridge regression onto {0,1} one-hot targets."""
    vectors = check_training_set(features)
    started = time.perf_counter()

    hidden_weights, hidden_bias = random_projection(vectors.shape[1], config.hidden_units, config.seed)
    hidden = expit(vectors @ hidden_weights + hidden_bias)
    readout = solve_readout(hidden, one_hot(features.labels, features.class_count), config.ridge)

    wall_time = time.perf_counter() - started
    logger.info("elm_trained", samples=vectors.shape[0], hidden_units=config.hidden_units,
                wall_time_s=round(wall_time, 3))
    return TrainedModel(
        kind="elm",
        weights=freeze_weights({"hidden_weights": hidden_weights, "hidden_bias": hidden_bias, "readout": readout}),
        class_count=features.class_count,
        input_dim=vectors.shape[1],
        metadata={**config.echo("elm."), "wall_time_s": f"{wall_time:.3f}"},
    )
