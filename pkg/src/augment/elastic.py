"""Elastic and affine label-preserving warps (data-space augmentation)."""
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from src.core.errors import DimensionError, InsufficientDataError, ParameterError
from src.core.params import AffineParams, AffineRanges, ElasticParams
from src.core.types import DisplacementField, LabeledImageSet
from src.utils.logging_config import logger
from src.utils.rng import derive_seed, make_rng

# Out-of-bounds samples read as this value (MNIST background)
BACKGROUND = 0.0


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ceil(3 sigma)."""
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_smooth(grid: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with zero-padded edges."""
    kernel = gaussian_kernel(sigma)
    smoothed = ndimage.correlate1d(grid, kernel, axis=0, mode="constant", cval=0.0)
    return ndimage.correlate1d(smoothed, kernel, axis=1, mode="constant", cval=0.0)


def uniform_noise(height: int, width: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The raw i.i.d. uniform[-1, 1] component grids a field is built from."""
    rng = make_rng(seed)
    ux = rng.uniform(-1.0, 1.0, size=(height, width))
    uy = rng.uniform(-1.0, 1.0, size=(height, width))
    return ux, uy


def normalize_field(ux: np.ndarray, uy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jointly rescale both components to unit RMS displacement magnitude."""
    rms = np.sqrt(np.mean(ux ** 2 + uy ** 2))
    if rms == 0.0:
        # Degenerate draw; a unit field along x keeps the contract.
        return np.ones_like(ux), np.zeros_like(uy)
    return ux / rms, uy / rms


def generate_displacement_field(height: int, width: int, sigma: float, seed: int) -> DisplacementField:
    """
    Smoothed, normalized random displacement field.

    Both components start as uniform noise in [-1, 1], are smoothed by a
    Gaussian of std-dev sigma and rescaled so the RMS displacement is 1 pixel;
    alpha then reads as the RMS displacement in pixels.
    """
    if height < 1 or width < 1:
        raise ParameterError(f"field dimensions must be >= 1, got {height}x{width}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")

    ux, uy = uniform_noise(height, width, seed)
    ux, uy = normalize_field(gaussian_smooth(ux, sigma), gaussian_smooth(uy, sigma))
    return DisplacementField(ux=ux, uy=uy, sigma=float(sigma), seed=int(seed))


def sample_bilinear(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Bilinear lookup at fractional (row, col) positions; outside reads BACKGROUND."""
    sampled = ndimage.map_coordinates(
        image, [rows, cols], order=1, mode="grid-constant", cval=BACKGROUND, prefilter=False
    )
    return np.clip(sampled, 0.0, 1.0)


def elastic_warp(image: np.ndarray, field: DisplacementField, alpha: float) -> np.ndarray:
    """
    Backward elastic warp: output pixel R reads the input at R + alpha * u(R).

    Args:
        image: (H, W) grid with values in [0, 1]
        field: Displacement field of the same size
        alpha: Displacement strength in pixels

    Returns:
        Warped (H, W) image clamped to [0, 1]
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape != field.shape:
        raise DimensionError(f"image {image.shape} and field {field.shape} differ in size")
    if alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    if alpha == 0:
        return image.copy()

    rows, cols = np.indices(image.shape, dtype=np.float64)
    return sample_bilinear(image, rows + alpha * field.uy, cols + alpha * field.ux)


def affine_matrix(params: AffineParams) -> np.ndarray:
    """Forward 2x2 map in (x, y) coordinates: scale * rotation * shear."""
    cos, sin = math.cos(params.rotation), math.sin(params.rotation)
    rotation = np.array([[cos, -sin], [sin, cos]])
    shear = np.array([[1.0, params.shear_x], [params.shear_y, 1.0]])
    return params.scale * rotation @ shear


def affine_warp(image: np.ndarray, params: AffineParams) -> np.ndarray:
    """
    Apply an affine map about the image center by backward warping.

    The forward map sends p to c + M (p - c) + t, so output pixel p' reads the
    input at c + M^-1 (p' - c - t); x runs along columns, y along rows.
    """
    image = np.asarray(image, dtype=np.float64)
    if params.scale <= 0:
        raise ParameterError(f"scale must be > 0, got {params.scale}")
    matrix = affine_matrix(params)
    if abs(np.linalg.det(matrix)) < 1e-12:
        raise ParameterError("affine map is singular (shear cancels the axes)")
    inverse = np.linalg.inv(matrix)

    height, width = image.shape
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.indices(image.shape, dtype=np.float64)
    dx = cols - cx - params.translate_x
    dy = rows - cy - params.translate_y
    src_x = cx + inverse[0, 0] * dx + inverse[0, 1] * dy
    src_y = cy + inverse[1, 0] * dx + inverse[1, 1] * dy
    return sample_bilinear(image, src_y, src_x)


def sample_affine_params(ranges: AffineRanges, rng: np.random.Generator) -> AffineParams:
    draws = {name: float(rng.uniform(*getattr(ranges, name))) for name in AffineRanges.model_fields}
    return AffineParams(**draws)


def warp_augment_dataset(
    image_set: LabeledImageSet,
    per_class_synthetic: int,
    elastic: ElasticParams,
    affine_ranges: Optional[AffineRanges] = None,
    seed: int = 0,
) -> LabeledImageSet:
    """
    Create per_class_synthetic warped samples for every class.

    Synthetic sample j of class c warps the (j mod n_c)-th real sample of that
    class (in source order) with a field seeded from (seed, c, j); when
    affine_ranges is given an affine map drawn from the same stream is applied
    before the elastic warp. Only the synthetic samples are returned, ordered
    by class and then j.
    """
    if len(image_set) == 0:
        raise InsufficientDataError("cannot augment an empty set")
    if per_class_synthetic < 0:
        raise ParameterError(f"per_class_synthetic must be >= 0, got {per_class_synthetic}")

    height, width = image_set.height, image_set.width
    images, labels = [], []
    for class_id in range(image_set.class_count):
        members = np.flatnonzero(image_set.labels == class_id)
        if per_class_synthetic == 0:
            continue
        if members.size == 0:
            raise InsufficientDataError(
                f"class {class_id} has no real samples to warp", class_id=class_id
            )
        for j in range(per_class_synthetic):
            source = image_set.images[members[j % members.size]]
            sample_seed = derive_seed(seed, class_id, j)
            if affine_ranges is not None:
                source = affine_warp(source, sample_affine_params(affine_ranges, make_rng(sample_seed, 1)))
            field = generate_displacement_field(height, width, elastic.sigma, sample_seed)
            images.append(elastic_warp(source, field, elastic.alpha))
            labels.append(class_id)

    logger.info(
        "warp_augment_finished",
        per_class_synthetic=per_class_synthetic,
        alpha=elastic.alpha,
        sigma=elastic.sigma,
        affine=affine_ranges is not None,
        seed=seed,
    )
    if not images:
        return LabeledImageSet(np.zeros((0, height, width)), np.zeros(0, dtype=np.int64), image_set.class_count)
    return LabeledImageSet(np.stack(images), np.asarray(labels), image_set.class_count)


def synthetic_cache_name(
    elastic: ElasticParams, seed: int, per_class_synthetic: int, affine: bool = False, source_tag: str = ""
) -> str:
    """Cache file name embedding the warp settings for audit; source_tag tells source pools apart."""
    suffix = "_affine" if affine else ""
    tag = f"_{source_tag}" if source_tag else ""
    return f"elastic_a{elastic.alpha:g}_s{elastic.sigma:g}_seed{seed}_n{per_class_synthetic}{suffix}{tag}.wbc"
