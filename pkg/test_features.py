"""Tests for the fixed convolution + LP-pooling stage and standardization."""
import math

import numpy as np
import pytest
from scipy.signal import correlate2d

from conftest import toy_set
from src.core.errors import DimensionError, FormatError, ParameterError
from src.core.params import PoolingConfig
from src.core.types import FeatureSet, FilterBank
from src.features.stage import (
    BANK_MAGIC,
    BANK_VERSION,
    apply_standardizer,
    concat_features,
    convolve_valid,
    default_filter_bank,
    extract_features,
    feature_dim,
    fit_standardizer,
    load_feature_cache,
    load_filter_bank,
    lp_pool,
    save_feature_cache,
    save_filter_bank,
    standardize,
)
from src.utils.envelope import write_envelope


def test_default_bank_is_centered_and_unit_norm():
    bank = default_filter_bank(7, 96, seed=0)
    assert (bank.count, bank.size) == (96, 7)
    np.testing.assert_allclose(bank.filters.mean(axis=(1, 2)), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.sqrt((bank.filters ** 2).sum(axis=(1, 2))), 1.0)
    np.testing.assert_array_equal(bank.filters, default_filter_bank(7, 96, seed=0).filters)
    assert bank.source_tag == "seeded:W=7,L=96,seed=0"


def test_mnist_scale_feature_dim():
    bank = default_filter_bank(7, 96)
    assert feature_dim(28, 28, bank, PoolingConfig()) == 96 * 8 * 8


def test_convolve_valid_matches_scipy():
    rng = np.random.default_rng(0)
    image, kernel = rng.random((10, 12)), rng.standard_normal((3, 3))
    np.testing.assert_allclose(convolve_valid(image, kernel), correlate2d(image, kernel, mode="valid"))


def test_convolve_valid_is_linear():
    rng = np.random.default_rng(5)
    x, y, kernel = rng.random((9, 9)), rng.random((9, 9)), rng.standard_normal((4, 4))
    combined = convolve_valid(2.5 * x - 0.75 * y, kernel)
    np.testing.assert_allclose(combined, 2.5 * convolve_valid(x, kernel) - 0.75 * convolve_valid(y, kernel), atol=1e-9)


def test_delta_kernel_crops_the_interior():
    image = np.random.default_rng(6).random((8, 10))
    delta = np.zeros((3, 3))
    delta[1, 1] = 1.0
    np.testing.assert_array_equal(convolve_valid(image, delta), image[1:-1, 1:-1])


def test_convolve_kernel_too_large():
    with pytest.raises(DimensionError):
        convolve_valid(np.zeros((3, 3)), np.zeros((4, 4)))


def test_lp_pool_p1_is_window_mean_of_magnitude():
    rng = np.random.default_rng(1)
    feature_map = rng.standard_normal((6, 6))
    pooled = lp_pool(feature_map, PoolingConfig(q=2, stride=2, p=1.0))
    expected = np.abs(feature_map).reshape(3, 2, 3, 2).mean(axis=(1, 3))
    np.testing.assert_allclose(pooled, expected)


def test_lp_pool_infinite_p_is_max():
    rng = np.random.default_rng(2)
    feature_map = rng.standard_normal((6, 6))
    pooled = lp_pool(feature_map, PoolingConfig(q=3, stride=3, p=math.inf))
    expected = np.abs(feature_map).reshape(2, 3, 2, 3).max(axis=(1, 3))
    np.testing.assert_array_equal(pooled, expected)


def test_lp_pool_constant_map_is_constant_for_any_p():
    feature_map = np.full((8, 8), -0.5)
    for p in (1.0, 2.0, 3.5):
        pooled = lp_pool(feature_map, PoolingConfig(q=4, stride=2, p=p))
        assert pooled.shape == (3, 3)
        np.testing.assert_allclose(pooled, 0.5)


def test_lp_pool_grows_with_p():
    feature_map = np.random.default_rng(3).standard_normal((8, 8))
    low = lp_pool(feature_map, PoolingConfig(q=4, stride=4, p=1.0))
    high = lp_pool(feature_map, PoolingConfig(q=4, stride=4, p=4.0))
    assert np.all(high >= low - 1e-12)


def test_lp_pool_normalized_closed_form():
    pooled = lp_pool(np.array([[3.0, 4.0], [0.0, 0.0]]), PoolingConfig(q=2, stride=2, p=2.0))
    np.testing.assert_allclose(pooled, [[2.5]])


def test_lp_pool_is_monotone_in_p_on_nonnegative_maps():
    rng = np.random.default_rng(7)
    for _ in range(20):
        feature_map = rng.random((10, 10))
        outputs = [lp_pool(feature_map, PoolingConfig(q=4, stride=2, p=p)) for p in (1.0, 1.5, 2.0, 3.0, 8.0, math.inf)]
        for low, high in zip(outputs, outputs[1:]):
            assert np.all(high >= low - 1e-12)


def test_lp_pool_window_too_large():
    with pytest.raises(DimensionError):
        lp_pool(np.zeros((3, 3)), PoolingConfig(q=4, stride=1))


def test_pooling_rejects_stride_beyond_window():
    with pytest.raises(ParameterError):
        PoolingConfig(q=2, stride=3)


def test_extract_features_layout(small_features):
    images = toy_set(per_class=2)
    bank = default_filter_bank(3, 4, seed=5)
    features = extract_features(images, bank, small_features.pooling)

    assert features.vectors.dtype == np.float32
    assert features.vectors.shape == (20, 4 * 5 * 5)
    np.testing.assert_array_equal(features.labels, images.labels)

    # First filter, first image: convolve then pool by hand
    conv = convolve_valid(images.images[0], bank.filters[0])
    pooled = lp_pool(conv, small_features.pooling)
    np.testing.assert_allclose(features.vectors[0, :25], pooled.ravel().astype(np.float32), rtol=1e-6, atol=1e-6)


def test_extract_features_independent_of_batching(small_features):
    images = toy_set(per_class=2)
    bank = default_filter_bank(3, 4, seed=5)
    full = extract_features(images, bank, small_features.pooling)
    part = extract_features(images.take(np.arange(3, 7)), bank, small_features.pooling)
    np.testing.assert_array_equal(part.vectors, full.vectors[3:7])


def test_extract_features_follows_row_permutation(small_features):
    images = toy_set(per_class=2)
    bank = default_filter_bank(3, 4, seed=5)
    order = np.random.default_rng(8).permutation(len(images))
    full = extract_features(images, bank, small_features.pooling)
    shuffled = extract_features(images.take(order), bank, small_features.pooling)
    np.testing.assert_array_equal(shuffled.vectors, full.vectors[order])
    np.testing.assert_array_equal(shuffled.labels, full.labels[order])


def test_extract_features_equals_per_image_concatenation(small_features):
    images = toy_set(per_class=1)
    bank = default_filter_bank(3, 4, seed=5)
    full = extract_features(images, bank, small_features.pooling)
    singles = [extract_features(images.take(np.array([i])), bank, small_features.pooling) for i in range(len(images))]
    np.testing.assert_array_equal(concat_features(singles).vectors, full.vectors)


def test_extract_features_kernel_larger_than_image():
    bank = default_filter_bank(13, 2)
    with pytest.raises(DimensionError):
        extract_features(toy_set(per_class=1), bank, PoolingConfig(q=1, stride=1))


def test_filter_bank_file_roundtrip(tmp_path):
    bank = default_filter_bank(5, 3, seed=2)
    path = tmp_path / "bank.wbf"
    save_filter_bank(bank, path)
    loaded = load_filter_bank(path)

    np.testing.assert_array_equal(loaded.filters, bank.filters.astype(np.float32))
    assert loaded.source_tag.startswith("sha256:")
    assert loaded.source_tag == load_filter_bank(path).source_tag


def test_filter_bank_file_with_empty_shape(tmp_path):
    path = tmp_path / "bank.wbf"
    write_envelope(path, BANK_MAGIC, BANK_VERSION, (0, 96), b"")
    with pytest.raises(FormatError, match="W=0"):
        load_filter_bank(path)


def test_filter_bank_file_corruption(tmp_path):
    path = tmp_path / "bank.wbf"
    save_filter_bank(default_filter_bank(3, 2), path)
    data = bytearray(path.read_bytes())
    data[-10] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError):
        load_filter_bank(path)


def test_standardize_train_statistics():
    rng = np.random.default_rng(4)
    vectors = rng.normal(3.0, 2.0, size=(200, 5))
    vectors[:, 2] = 2.0
    train = FeatureSet(vectors, np.zeros(200, dtype=np.int64), 1)
    standardizer, (scaled,) = standardize(train)

    assert scaled.standardized
    np.testing.assert_allclose(scaled.vectors.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(scaled.vectors[:, [0, 1, 3, 4]].std(axis=0), 1.0, atol=1e-10)
    assert np.all(np.isfinite(scaled.vectors))
    np.testing.assert_allclose(scaled.vectors[:, 2], 0.0, atol=1e-6)
    assert standardizer.scales[2] == pytest.approx(1e-8)


def test_standardize_uses_training_statistics_only():
    train = FeatureSet(np.array([[0.0], [2.0]]), np.array([0, 0]), 1)
    test = FeatureSet(np.array([[4.0]]), np.array([0]), 1)
    _, (_, scaled_test) = standardize(train, test)
    np.testing.assert_allclose(scaled_test.vectors, [[3.0]])


def test_standardize_twice_is_not_identity():
    train = FeatureSet(np.array([[0.0], [2.0], [10.0]]), np.zeros(3, dtype=np.int64), 1)
    standardizer = fit_standardizer(train)
    once = apply_standardizer(standardizer, train)
    twice = apply_standardizer(standardizer, once)
    assert not np.allclose(once.vectors, twice.vectors)


def test_standardizer_errors():
    with pytest.raises(ParameterError):
        fit_standardizer(FeatureSet(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), 1))
    standardizer = fit_standardizer(FeatureSet(np.ones((2, 3)), np.zeros(2, dtype=np.int64), 1))
    with pytest.raises(DimensionError):
        apply_standardizer(standardizer, FeatureSet(np.ones((2, 4)), np.zeros(2, dtype=np.int64), 1))


def test_feature_cache_roundtrip(tmp_path, small_features):
    bank = default_filter_bank(3, 4)
    features = extract_features(toy_set(per_class=1), bank, small_features.pooling)
    path = tmp_path / "features.wbf"
    save_feature_cache(features, path)
    loaded = load_feature_cache(path)

    np.testing.assert_array_equal(loaded.vectors, features.vectors)
    np.testing.assert_array_equal(loaded.labels, features.labels)
    assert loaded.class_count == 10 and not loaded.standardized


def test_bank_requires_square_kernels():
    with pytest.raises(DimensionError):
        FilterBank(np.zeros((2, 3, 4)), "bad")
