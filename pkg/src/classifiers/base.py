"""Shared prediction, metrics and model persistence for the classifier heads."""
import struct
from pathlib import Path

import numpy as np
from scipy.special import expit, softmax

from src.core.errors import DimensionError, FormatError, ParameterError
from src.core.types import FeatureSet, TrainedModel
from src.utils.envelope import read_envelope, write_envelope

MODEL_MAGIC = b"WBMODELS"
MODEL_VERSION = 1

# Parameter arrays stored per head, in file order
KIND_ARRAYS = {
    "mlp": ("hidden_weights", "hidden_bias", "output_weights", "output_bias"),
    "svm": ("weights", "bias"),
    "elm": ("hidden_weights", "hidden_bias", "readout"),
}
KIND_CODES = {kind: code for code, kind in enumerate(KIND_ARRAYS)}


def one_hot(labels: np.ndarray, class_count: int) -> np.ndarray:
    targets = np.zeros((labels.shape[0], class_count), dtype=np.float64)
    targets[np.arange(labels.shape[0]), labels] = 1.0
    return targets


def freeze_weights(weights: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Round weights to float32-representable values so saved models reproduce exactly."""
    return {name: np.asarray(value, dtype=np.float32).astype(np.float64) for name, value in weights.items()}


def check_training_set(features: FeatureSet) -> np.ndarray:
    if len(features) == 0:
        raise ParameterError("cannot train on zero samples")
    vectors = np.asarray(features.vectors, dtype=np.float64)
    if not np.all(np.isfinite(vectors)):
        raise ParameterError("training features contain non-finite values")
    return vectors


def class_scores(model: TrainedModel, vectors: np.ndarray) -> np.ndarray:
    """Per-class scores: softmax for mlp, w.x + b for svm, beta^T h for elm."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != model.input_dim:
        raise DimensionError(
            f"features have shape {vectors.shape}, model expects dimension {model.input_dim}"
        )
    w = model.weights
    if model.kind == "mlp":
        hidden = expit(vectors @ w["hidden_weights"] + w["hidden_bias"])
        return softmax(hidden @ w["output_weights"] + w["output_bias"], axis=1)
    if model.kind == "svm":
        return vectors @ w["weights"] + w["bias"]
    if model.kind == "elm":
        hidden = expit(vectors @ w["hidden_weights"] + w["hidden_bias"])
        return hidden @ w["readout"]
    raise ParameterError(f"unknown model kind {model.kind!r}")


def predict(model: TrainedModel, features: FeatureSet) -> np.ndarray:
    """Argmax class per vector; ties go to the lowest class id."""
    return np.argmax(class_scores(model, features.vectors), axis=1)


def error_percent(predicted, truth) -> float:
    """100 x mismatches / N."""
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ParameterError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if truth.size == 0:
        raise ParameterError("cannot compute an error rate over zero samples")
    return 100.0 * float(np.count_nonzero(predicted != truth)) / truth.size


def save_model(model: TrainedModel, path: Path) -> None:
    """
    Envelope header: kind, input_dim, class_count, array bytes, text bytes.
    Payload: per array ndim + shape (uint32 BE) and float32 LE values, then
    the metadata echo as key=value lines.
    """
    blob = bytearray()
    for name in KIND_ARRAYS[model.kind]:
        array = np.asarray(model.weights[name])
        blob += struct.pack(f">I{array.ndim}I", array.ndim, *array.shape)
        blob += array.astype("<f4").tobytes()
    text = "".join(f"{key}={value}\n" for key, value in sorted(model.metadata.items())).encode("utf-8")
    header = (KIND_CODES[model.kind], model.input_dim, model.class_count, len(blob), len(text))
    write_envelope(path, MODEL_MAGIC, MODEL_VERSION, header, bytes(blob) + text)


def load_model(path: Path) -> TrainedModel:
    header, payload = read_envelope(
        path, MODEL_MAGIC, MODEL_VERSION, header_len=5, payload_size=lambda h: h[3] + h[4]
    )
    code, input_dim, class_count, blob_len, _ = header
    kinds = list(KIND_ARRAYS)
    if code >= len(kinds):
        raise FormatError(f"{path}: unknown model kind code {code}")
    kind = kinds[code]

    weights, offset = {}, 0
    for name in KIND_ARRAYS[kind]:
        (ndim,) = struct.unpack_from(">I", payload, offset)
        shape = struct.unpack_from(f">{ndim}I", payload, offset + 4)
        offset += 4 + 4 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        if offset + 4 * size > blob_len:
            raise FormatError(f"{path}: array {name} overruns the weight block")
        weights[name] = np.frombuffer(payload, dtype="<f4", count=size, offset=offset).reshape(shape).astype(np.float64)
        offset += 4 * size

    metadata = {}
    for line in payload[blob_len:].decode("utf-8").splitlines():
        key, _, value = line.partition("=")
        metadata[key] = value
    return TrainedModel(kind=kind, weights=weights, class_count=class_count, input_dim=input_dim, metadata=metadata)
