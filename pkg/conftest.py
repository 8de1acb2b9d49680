"""Shared fixtures: tiny synthetic digit sets written as IDX files."""
import numpy as np
import pytest

from src import config
from src.core.params import FeatureStageConfig, PoolingConfig
from src.core.types import FeatureSet, LabeledImageSet
from src.datasets.dataset_io import write_idx

TOY_SIZE = 12
TOY_CLASSES = 10


def toy_images(per_class: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """uint8 images where class c lights up row c + 1 over a faint noise background."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(TOY_CLASSES), per_class)
    images = rng.integers(0, 40, size=(labels.size, TOY_SIZE, TOY_SIZE))
    for index, label in enumerate(labels):
        images[index, label + 1, 1:TOY_SIZE - 1] = rng.integers(200, 256, size=TOY_SIZE - 2)
    order = rng.permutation(labels.size)
    return images[order].astype(np.uint8), labels[order].astype(np.uint8)


def toy_set(per_class: int = 6, seed: int = 0) -> LabeledImageSet:
    images, labels = toy_images(per_class, seed)
    return LabeledImageSet(images / 255.0, labels, TOY_CLASSES)


def blobs(per_class: int = 20, dim: int = 4, class_count: int = 3, spread: float = 0.3, seed: int = 0) -> FeatureSet:
    """Well separated Gaussian clusters, one per class."""
    rng = np.random.default_rng(seed)
    centers = 4.0 * np.eye(class_count, dim)
    vectors = np.concatenate([centers[c] + spread * rng.standard_normal((per_class, dim)) for c in range(class_count)])
    labels = np.repeat(np.arange(class_count), per_class)
    return FeatureSet(vectors, labels, class_count)


@pytest.fixture
def mnist_dir(tmp_path):
    """Directory holding toy train (30/class) and test (10/class) IDX files under the official names."""
    directory = tmp_path / "mnist"
    directory.mkdir()
    train_images, train_labels = toy_images(30, seed=1)
    test_images, test_labels = toy_images(10, seed=2)
    write_idx(train_images, train_labels, directory / config.TRAIN_IMAGES, directory / config.TRAIN_LABELS)
    write_idx(test_images, test_labels, directory / config.TEST_IMAGES, directory / config.TEST_LABELS)
    return directory


@pytest.fixture
def small_features():
    """A feature stage sized for 12x12 images: 3x3 kernels, 2x2 pooling."""
    return FeatureStageConfig(filter_size=3, filter_count=4, pooling=PoolingConfig(q=2, stride=2, p=2.0))
