"""Feature stage: fixed filter bank, valid convolution, LP-pooling and standardization."""
import hashlib
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.core.errors import DimensionError, FormatError, ParameterError
from src.core.params import PoolingConfig
from src.core.types import FeatureSet, FilterBank, LabeledImageSet, Standardizer
from src.utils.envelope import read_envelope, write_envelope
from src.utils.logging_config import logger
from src.utils.rng import make_rng

BANK_MAGIC = b"WBFILTER"
BANK_VERSION = 1
FEATURE_MAGIC = b"WBFEATUR"
FEATURE_VERSION = 1

STANDARDIZE_EPSILON = 1e-8

# Images per batched convolution
_CHUNK = 128


def default_filter_bank(size: int = 7, count: int = 96, seed: int = 0) -> FilterBank:
    """
    Seeded stand-in for pre-trained first-layer filters.

    Every kernel is drawn from a standard normal, then made zero-mean and
    unit Frobenius norm.
    """
    if size < 1 or count < 1:
        raise ParameterError(f"filter size and count must be >= 1, got W={size}, L={count}")
    rng = make_rng(seed)
    filters = rng.standard_normal((count, size, size))
    filters -= filters.mean(axis=(1, 2), keepdims=True)
    norms = np.sqrt((filters ** 2).sum(axis=(1, 2), keepdims=True))
    # A 1x1 kernel is all zero after centering
    filters = np.divide(filters, norms, out=np.zeros_like(filters), where=norms > 0)
    return FilterBank(filters=filters, source_tag=f"seeded:W={size},L={count},seed={seed}")


def save_filter_bank(bank: FilterBank, path: Path) -> None:
    """Write W, L and the kernels as float32 little-endian values."""
    payload = bank.filters.astype("<f4").tobytes()
    write_envelope(path, BANK_MAGIC, BANK_VERSION, (bank.size, bank.count), payload)


def load_filter_bank(path: Path) -> FilterBank:
    """Load a bank file; the source tag is the SHA-256 of the file contents."""
    header, payload = read_envelope(
        path, BANK_MAGIC, BANK_VERSION, header_len=2, payload_size=lambda h: 4 * h[1] * h[0] * h[0]
    )
    size, count = header
    if size < 1 or count < 1:
        raise FormatError(f"{path}: filter bank declares W={size}, L={count}")
    filters = np.frombuffer(payload, dtype="<f4").reshape(count, size, size).astype(np.float64)
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    logger.info("filter_bank_loaded", path=str(path), size=size, count=count)
    return FilterBank(filters=filters, source_tag=f"sha256:{digest}")


def convolve_valid(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode 2-D cross-correlation with stride 1."""
    image = np.asarray(image, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape[0] > image.shape[0] or kernel.shape[1] > image.shape[1]:
        raise DimensionError(f"kernel {kernel.shape} larger than image {image.shape}")
    windows = sliding_window_view(image, kernel.shape)
    return np.einsum("ijkl,kl->ij", windows, kernel)


def pooled_size(length: int, pool: PoolingConfig) -> int:
    return (length - pool.q) // pool.stride + 1


def lp_pool(feature_map: np.ndarray, pool: PoolingConfig) -> np.ndarray:
    """
    Window-size-normalized LP-pooling over the last two axes.

    Finite p gives (sum |x|^p)^(1/p) / q^(2/p), the power mean of |x| over
    the window; p = inf gives max |x|.
    """
    feature_map = np.asarray(feature_map, dtype=np.float64)
    height, width = feature_map.shape[-2:]
    if pool.q > height or pool.q > width:
        raise DimensionError(f"pool window {pool.q} exceeds map size {height}x{width}")

    out_h, out_w = pooled_size(height, pool), pooled_size(width, pool)
    magnitude = np.abs(feature_map)
    if not pool.is_max and pool.p != 1.0:
        magnitude = np.power(magnitude, pool.p)

    # Accumulate window offsets one at a time; memory stays at the output size.
    reduce = np.maximum if pool.is_max else np.add
    pooled = None
    span_h, span_w = pool.stride * (out_h - 1) + 1, pool.stride * (out_w - 1) + 1
    for di in range(pool.q):
        for dj in range(pool.q):
            part = magnitude[..., di:di + span_h:pool.stride, dj:dj + span_w:pool.stride]
            pooled = part.copy() if pooled is None else reduce(pooled, part)

    if pool.is_max:
        return pooled
    pooled /= pool.q * pool.q
    return pooled if pool.p == 1.0 else np.power(pooled, 1.0 / pool.p)


def feature_dim(height: int, width: int, bank: FilterBank, pool: PoolingConfig) -> int:
    conv_h, conv_w = height - bank.size + 1, width - bank.size + 1
    return bank.count * pooled_size(conv_h, pool) * pooled_size(conv_w, pool)


def _extract_chunk(images: np.ndarray, bank: FilterBank, pool: PoolingConfig) -> np.ndarray:
    windows = sliding_window_view(images, (bank.size, bank.size), axis=(1, 2))
    # (N, h, w, W, W) x (L, W, W) -> (N, L, h, w)
    maps = np.einsum("nhwkl,fkl->nfhw", windows, bank.filters)
    pooled = lp_pool(maps, pool)
    return pooled.reshape(images.shape[0], -1)


def extract_features(image_set: LabeledImageSet, bank: FilterBank, pool: PoolingConfig) -> FeatureSet:
    """
    Convolve every image with every kernel, LP-pool, and flatten per image.

    The vector layout is (filter, pooled row, pooled col) row-major. Values are
    rounded to float32 so cached and freshly computed features agree exactly.
    """
    if bank.size > image_set.height or bank.size > image_set.width:
        raise DimensionError(
            f"kernel size {bank.size} larger than images {image_set.height}x{image_set.width}"
        )
    dim = feature_dim(image_set.height, image_set.width, bank, pool)
    if pool.q > image_set.height - bank.size + 1 or pool.q > image_set.width - bank.size + 1:
        raise DimensionError(f"pool window {pool.q} exceeds the convolution map")

    vectors = np.empty((len(image_set), dim), dtype=np.float32)
    for start in range(0, len(image_set), _CHUNK):
        chunk = image_set.images[start:start + _CHUNK]
        vectors[start:start + chunk.shape[0]] = _extract_chunk(chunk, bank, pool)

    logger.debug("features_extracted", count=len(image_set), dim=dim, bank=bank.source_tag)
    return FeatureSet(vectors=vectors, labels=image_set.labels.copy(), class_count=image_set.class_count)


def fit_standardizer(train: FeatureSet, epsilon: float = STANDARDIZE_EPSILON) -> Standardizer:
    if len(train) == 0:
        raise ParameterError("cannot standardize on an empty training set")
    vectors = train.vectors.astype(np.float64)
    return Standardizer(
        means=vectors.mean(axis=0),
        scales=np.maximum(vectors.std(axis=0), epsilon),
        epsilon=epsilon,
    )


def apply_standardizer(standardizer: Standardizer, features: FeatureSet) -> FeatureSet:
    if features.dim != standardizer.means.shape[0]:
        raise DimensionError(
            f"feature dim {features.dim} does not match standardizer dim {standardizer.means.shape[0]}"
        )
    vectors = (features.vectors.astype(np.float64) - standardizer.means) / standardizer.scales
    return FeatureSet(vectors=vectors, labels=features.labels, class_count=features.class_count, standardized=True)


def standardize(train: FeatureSet, *others: FeatureSet) -> tuple[Standardizer, list[FeatureSet]]:
    """
    Fit per-feature mean/scale on train and apply to train and every other set.

    Returns:
        (standardizer, [train, *others] standardized)
    """
    standardizer = fit_standardizer(train)
    return standardizer, [apply_standardizer(standardizer, s) for s in (train, *others)]


def save_feature_cache(features: FeatureSet, path: Path) -> None:
    """Header (N, D, class_count, standardized), labels as uint32 BE, float32 LE values."""
    count, dim = features.vectors.shape
    payload = features.labels.astype(">u4").tobytes() + features.vectors.astype("<f4").tobytes()
    header = (count, dim, features.class_count, int(features.standardized))
    write_envelope(path, FEATURE_MAGIC, FEATURE_VERSION, header, payload)


def load_feature_cache(path: Path) -> FeatureSet:
    header, payload = read_envelope(
        path, FEATURE_MAGIC, FEATURE_VERSION, header_len=4, payload_size=lambda h: 4 * h[0] + 4 * h[0] * h[1]
    )
    count, dim, class_count, standardized = header
    labels = np.frombuffer(payload, dtype=">u4", count=count).astype(np.int64)
    vectors = np.frombuffer(payload, dtype="<f4", offset=4 * count).reshape(count, dim).astype(np.float32)
    return FeatureSet(vectors=vectors, labels=labels, class_count=class_count, standardized=bool(standardized))


def concat_features(parts: Iterable[FeatureSet]) -> FeatureSet:
    parts = list(parts)
    return FeatureSet(
        vectors=np.concatenate([p.vectors for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        class_count=parts[0].class_count,
        standardized=parts[0].standardized,
    )
