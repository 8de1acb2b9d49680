"""Single-hidden-layer sigmoid MLP trained by backpropagation with momentum."""
import math
import time

import numpy as np
from scipy.special import expit, log_softmax, softmax

from src.classifiers.base import check_training_set, freeze_weights, one_hot
from src.core.errors import DivergenceError
from src.core.params import MlpConfig
from src.core.types import FeatureSet, TrainedModel
from src.utils.logging_config import logger
from src.utils.rng import make_rng

PARAM_NAMES = ("hidden_weights", "hidden_bias", "output_weights", "output_bias")


def init_params(input_dim: int, hidden_units: int, class_count: int, seed: int) -> dict[str, np.ndarray]:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
    rng = make_rng(seed, 0)
    hidden_limit = math.sqrt(6.0 / (input_dim + hidden_units))
    output_limit = math.sqrt(6.0 / (hidden_units + class_count))
    return {
        "hidden_weights": rng.uniform(-hidden_limit, hidden_limit, size=(input_dim, hidden_units)),
        "hidden_bias": np.zeros(hidden_units),
        "output_weights": rng.uniform(-output_limit, output_limit, size=(hidden_units, class_count)),
        "output_bias": np.zeros(class_count),
    }


def loss_and_gradients(params: dict[str, np.ndarray], vectors: np.ndarray, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """
    Mean softmax cross-entropy and its gradient for every parameter.

    Args:
        params: hidden_weights (D, H), hidden_bias (H,), output_weights (H, C), output_bias (C,)
        vectors: (N, D) inputs
        targets: (N, C) one-hot targets
    """
    count = vectors.shape[0]
    hidden = expit(vectors @ params["hidden_weights"] + params["hidden_bias"])
    logits = hidden @ params["output_weights"] + params["output_bias"]
    loss = -float(np.sum(targets * log_softmax(logits, axis=1))) / count

    d_logits = (softmax(logits, axis=1) - targets) / count
    d_hidden = (d_logits @ params["output_weights"].T) * hidden * (1.0 - hidden)
    gradients = {
        "hidden_weights": vectors.T @ d_hidden,
        "hidden_bias": d_hidden.sum(axis=0),
        "output_weights": hidden.T @ d_logits,
        "output_bias": d_logits.sum(axis=0),
    }
    return loss, gradients


def train_mlp(features: FeatureSet, config: MlpConfig) -> TrainedModel:
    """
    Train the hidden and output layers by mini-batch gradient descent with momentum.

    Batches follow a fresh seeded permutation each epoch; batch_size="full"
    uses every sample, in order, for one step per epoch. diagnostics["loss"]
    holds the sample-weighted mean batch loss of every epoch.
    """
    vectors = check_training_set(features)
    targets = one_hot(features.labels, features.class_count)
    count = vectors.shape[0]
    batch = count if config.batch_size == "full" else min(config.batch_size, count)

    params = init_params(vectors.shape[1], config.hidden_units, features.class_count, config.seed)
    velocity = {name: np.zeros_like(value) for name, value in params.items()}
    history = []
    started = time.perf_counter()

    for epoch in range(config.epochs):
        order = np.arange(count) if config.batch_size == "full" else make_rng(config.seed, 1, epoch).permutation(count)
        epoch_loss = 0.0
        for start in range(0, count, batch):
            rows = order[start:start + batch]
            loss, gradients = loss_and_gradients(params, vectors[rows], targets[rows])
            if not math.isfinite(loss):
                raise DivergenceError(f"MLP loss became non-finite at epoch {epoch}", epoch=epoch)
            epoch_loss += loss * rows.shape[0]
            for name in PARAM_NAMES:
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * gradients[name]
                params[name] += velocity[name]
        history.append(epoch_loss / count)
        if epoch % 50 == 0:
            logger.debug("mlp_epoch", epoch=epoch, loss=history[-1])

    wall_time = time.perf_counter() - started
    logger.info("mlp_trained", samples=count, epochs=config.epochs, final_loss=history[-1] if history else None,
                wall_time_s=round(wall_time, 3))
    return TrainedModel(
        kind="mlp",
        weights=freeze_weights(params),
        class_count=features.class_count,
        input_dim=vectors.shape[1],
        metadata={**config.echo("mlp."), "wall_time_s": f"{wall_time:.3f}"},
        diagnostics={"loss": history},
    )
