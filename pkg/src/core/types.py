"""Domain containers passed between the dataset, augmentation, feature and classifier stages."""
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.core.errors import ConsistencyError, DimensionError, ParameterError


@dataclass(frozen=True)
class LabeledImageSet:
    """
    Grayscale images with class labels, the raw data-space representation.

    images has shape (N, height, width) with pixels in [0, 1];
    labels has shape (N,) with ids in [0, class_count).
    """

    images: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if images.ndim != 3:
            raise DimensionError(f"images must be (N, H, W), got shape {images.shape}")
        if labels.shape != (images.shape[0],):
            raise ConsistencyError(
                f"{images.shape[0]} images but labels have shape {labels.shape}"
            )
        if self.class_count < 1:
            raise ParameterError(f"class_count must be >= 1, got {self.class_count}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ConsistencyError(f"labels must lie in [0, {self.class_count})")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise ParameterError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.images.shape[1]

    @property
    def width(self) -> int:
        return self.images.shape[2]

    def __len__(self) -> int:
        return self.images.shape[0]

    def class_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def take(self, indices: np.ndarray) -> "LabeledImageSet":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledImageSet(self.images[indices], self.labels[indices], self.class_count)


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel displacement u(x, y); ux moves along columns, uy along rows."""

    ux: np.ndarray
    uy: np.ndarray
    sigma: float
    seed: int

    def __post_init__(self):
        if self.ux.shape != self.uy.shape or self.ux.ndim != 2:
            raise DimensionError(
                f"displacement components must be equal 2-D grids, got {self.ux.shape} and {self.uy.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.ux.shape

    def rms_magnitude(self) -> float:
        return float(np.sqrt(np.mean(self.ux ** 2 + self.uy ** 2)))


@dataclass(frozen=True)
class FilterBank:
    """L square convolution kernels of size W x W, stored as an (L, W, W) array."""

    filters: np.ndarray
    source_tag: str

    def __post_init__(self):
        filters = np.asarray(self.filters, dtype=np.float64)
        if filters.ndim != 3 or filters.shape[1] != filters.shape[2]:
            raise DimensionError(f"filter bank must be (L, W, W), got {filters.shape}")
        object.__setattr__(self, "filters", filters)

    @property
    def size(self) -> int:
        return self.filters.shape[1]

    @property
    def count(self) -> int:
        return self.filters.shape[0]


@dataclass(frozen=True)
class FeatureSet:
    """Feature-stage output: an (N, D) matrix of feature vectors with their labels."""

    vectors: np.ndarray
    labels: np.ndarray
    class_count: int
    standardized: bool = False

    def __post_init__(self):
        vectors = np.asarray(self.vectors)
        labels = np.asarray(self.labels, dtype=np.int64)
        if vectors.ndim != 2:
            raise DimensionError(f"feature vectors must be (N, D), got {vectors.shape}")
        if labels.shape != (vectors.shape[0],):
            raise ConsistencyError(f"{vectors.shape[0]} vectors but labels have shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ConsistencyError(f"labels must lie in [0, {self.class_count})")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def class_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def class_vectors(self, class_id: int) -> np.ndarray:
        return self.vectors[self.labels == class_id]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature means and scales fitted on a training FeatureSet."""

    means: np.ndarray
    scales: np.ndarray
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.means.shape != self.scales.shape:
            raise DimensionError("means and scales must have the same length")
        if np.any(self.scales <= 0):
            raise ParameterError("standardizer scales must all be > 0")


@dataclass
class TrainedModel:
    """
    A fitted classifier head.

    weights holds the named parameter arrays of the head:
    mlp -> hidden_weights, hidden_bias, output_weights, output_bias;
    svm -> weights (D, C), bias (C,);
    elm -> hidden_weights, hidden_bias, readout (H, C).
    """

    kind: str
    weights: dict[str, np.ndarray]
    class_count: int
    input_dim: int
    metadata: dict[str, str] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
