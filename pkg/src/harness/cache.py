"""Content-addressed feature cache and the off-line warped-image cache."""
import hashlib
import threading
from pathlib import Path

import numpy as np

from src.augment.elastic import synthetic_cache_name, warp_augment_dataset
from src.core.errors import FormatError
from src.core.params import AffineRanges, ElasticParams, PoolingConfig
from src.core.types import FeatureSet, FilterBank, LabeledImageSet
from src.datasets.dataset_io import cache_roundtrip, load_image_cache
from src.features.stage import extract_features, load_feature_cache, save_feature_cache
from src.utils.logging_config import logger


def feature_key(image_set: LabeledImageSet, bank: FilterBank, pool: PoolingConfig) -> str:
    """SHA-256 over the image bytes, labels, filter values and pooling settings."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(image_set.images).tobytes())
    digest.update(image_set.labels.astype("<i8").tobytes())
    digest.update(np.ascontiguousarray(bank.filters).tobytes())
    digest.update(pool.model_dump_json().encode("utf-8"))
    return digest.hexdigest()


class FeatureCache:
    """
    Extract features once per distinct image set.

    Results are kept in memory and, when a directory is given, on disk under
    features/<key>.wbf so later runs start warm.
    """

    def __init__(self, bank: FilterBank, pool: PoolingConfig, cache_dir: Path = None):
        self.bank = bank
        self.pool = pool
        self.directory = Path(cache_dir) / "features" if cache_dir else None
        self._memory: dict[str, FeatureSet] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def features(self, image_set: LabeledImageSet, keep: bool = True) -> FeatureSet:
        """Features for image_set; keep=False skips the in-memory copy for blocks the caller holds itself."""
        key = feature_key(image_set, self.bank, self.pool)
        with self._lock:
            if key in self._memory:
                self.hits += 1
                return self._memory[key]

        path = self.directory / f"{key}.wbf" if self.directory else None
        features = None
        if path is not None and path.exists():
            try:
                features = load_feature_cache(path)
                with self._lock:
                    self.hits += 1
                logger.debug("feature_cache_hit", key=key[:12], count=len(features))
            except FormatError as e:
                logger.warning("feature_cache_corrupt", path=str(path), error=str(e))

        if features is None:
            with self._lock:
                self.misses += 1
            features = extract_features(image_set, self.bank, self.pool)
            if path is not None:
                save_feature_cache(features, path)
            logger.info("features_cached", key=key[:12], count=len(features), dim=features.dim)

        if keep:
            with self._lock:
                self._memory[key] = features
        return features


def warped_images(
    pool: LabeledImageSet,
    per_class_synthetic: int,
    elastic: ElasticParams,
    affine_ranges: AffineRanges,
    seed: int,
    cache_dir: Path,
) -> LabeledImageSet:
    """
    Warped synthetic samples, generated off-line once and reused.

    Fresh sets go through the byte cache before use, so a cold run sees the
    same quantized pixels a warm run reads back.
    """
    source = hashlib.sha256(np.ascontiguousarray(pool.images).tobytes())
    source.update(pool.labels.astype("<i8").tobytes())
    if affine_ranges is not None:
        source.update(affine_ranges.model_dump_json().encode("utf-8"))
    name = synthetic_cache_name(
        elastic, seed, per_class_synthetic, affine=affine_ranges is not None, source_tag=source.hexdigest()[:10]
    )
    path = Path(cache_dir) / name
    if path.exists():
        try:
            cached = load_image_cache(path)
            logger.info("warp_cache_hit", path=str(path), count=len(cached))
            return cached
        except FormatError as e:
            logger.warning("warp_cache_corrupt", path=str(path), error=str(e))

    synthetic = warp_augment_dataset(pool, per_class_synthetic, elastic, affine_ranges, seed)
    return cache_roundtrip(synthetic, path)
