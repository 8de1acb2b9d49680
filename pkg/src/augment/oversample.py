"""Feature-space augmentation: SMOTE and simplified DBSMOTE.

Synthetic vector i of a class draws from its own PCG64 stream
(seed, class, i), so generation order and parallelism never change results.
"""
from typing import Literal, Union

import numpy as np

from src.core.errors import InsufficientDataError, ParameterError
from src.core.params import DbsmoteParams, SmoteParams
from src.core.types import FeatureSet
from src.utils.logging_config import logger
from src.utils.rng import make_rng

Method = Literal["smote", "dbsmote"]


def _require_members(class_vectors: np.ndarray, class_id: int) -> np.ndarray:
    class_vectors = np.asarray(class_vectors)
    if class_vectors.ndim != 2 or class_vectors.shape[0] == 0:
        raise InsufficientDataError(f"class {class_id} has no vectors to oversample from", class_id=class_id)
    return class_vectors


def smote_parents(member_count: int, count: int, params: SmoteParams, class_id: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Parent indices and convex weights for every synthetic vector.

    k distinct parents are drawn uniformly (with replacement only when the
    class has fewer than k members); weights are symmetric Dirichlet(1), the
    uniform distribution on the simplex, which is a uniform point on the
    segment for k = 2.

    Returns:
        (parents (count, k) int, weights (count, k) float)
    """
    parents = np.empty((count, params.k), dtype=np.int64)
    weights = np.empty((count, params.k), dtype=np.float64)
    replace = member_count < params.k
    for i in range(count):
        rng = make_rng(params.seed, class_id, i)
        parents[i] = rng.choice(member_count, size=params.k, replace=replace)
        weights[i] = 1.0 if params.k == 1 else rng.dirichlet(np.ones(params.k))
    return parents, weights


def smote_generate(class_vectors: np.ndarray, count: int, params: SmoteParams, class_id: int = 0) -> np.ndarray:
    """Synthetic vectors as random convex combinations of k same-class parents."""
    class_vectors = _require_members(class_vectors, class_id)
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    parents, weights = smote_parents(class_vectors.shape[0], count, params, class_id)

    synthetic = np.zeros((count, class_vectors.shape[1]), dtype=np.float64)
    for j in range(params.k):
        synthetic += weights[:, j:j + 1] * class_vectors[parents[:, j]]
    return synthetic


def dbsmote_generate(class_vectors: np.ndarray, count: int, params: DbsmoteParams, class_id: int = 0) -> np.ndarray:
    """
    Simplified DBSMOTE: synthetic vectors inside an eps ball around the class centroid.

    Each output is c + t * d * (x - c) / |x - c| for a uniformly chosen member
    x, t ~ U[0, 1] and d = min(eps, |x - c|); a member equal to the centroid
    yields the centroid.
    """
    class_vectors = _require_members(class_vectors, class_id)
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    members = class_vectors.astype(np.float64)
    centroid = members.mean(axis=0)

    picks = np.empty(count, dtype=np.int64)
    steps = np.empty(count, dtype=np.float64)
    for i in range(count):
        rng = make_rng(params.seed, class_id, i)
        picks[i] = rng.integers(members.shape[0])
        steps[i] = rng.uniform(0.0, 1.0)

    offsets = members[picks] - centroid
    distances = np.linalg.norm(offsets, axis=1)
    reach = steps * np.minimum(params.eps, distances)
    scale = np.divide(reach, distances, out=np.zeros_like(reach), where=distances > 0)
    return centroid + scale[:, None] * offsets


def oversample_to_count(
    features: FeatureSet,
    per_class_target: int,
    method: Method,
    params: Union[SmoteParams, DbsmoteParams],
) -> FeatureSet:
    """
    Top every class up to exactly per_class_target vectors.

    The input rows come first, unchanged; synthetic rows follow grouped by
    class. Synthetic labels inherit their class.
    """
    generators = {"smote": smote_generate, "dbsmote": dbsmote_generate}
    if method not in generators:
        raise ParameterError(f"unknown oversampling method {method!r}; expected smote or dbsmote")

    histogram = features.class_histogram()
    short = [c for c, n in enumerate(histogram) if n > per_class_target]
    if short:
        raise ParameterError(
            f"per_class_target {per_class_target} is below the current count of classes {short}"
        )

    blocks, labels = [features.vectors.astype(np.float64)], [features.labels]
    for class_id, current in enumerate(histogram):
        missing = per_class_target - int(current)
        if missing == 0:
            continue
        synthetic = generators[method](features.class_vectors(class_id), missing, params, class_id=class_id)
        blocks.append(synthetic)
        labels.append(np.full(missing, class_id, dtype=np.int64))

    logger.info(
        "oversample_finished",
        method=method,
        per_class_target=per_class_target,
        synthetic=int(sum(b.shape[0] for b in blocks[1:])),
        standardized=features.standardized,
        **params.echo(),
    )
    return FeatureSet(
        vectors=np.concatenate(blocks),
        labels=np.concatenate(labels),
        class_count=features.class_count,
        standardized=features.standardized,
    )
