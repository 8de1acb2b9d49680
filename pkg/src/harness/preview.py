"""Contact sheets of original vs warped digits for label-integrity checks."""
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from src.augment.elastic import elastic_warp, generate_displacement_field
from src.core.errors import IoError, ParameterError
from src.datasets.dataset_io import quantize
from src.utils.logging_config import logger
from src.utils.rng import derive_seed

# Gap between tiles, in output pixels
_MARGIN = 4


def warp_preview_grid(images: np.ndarray, alphas: Sequence[float], sigma: float, seed: int) -> np.ndarray:
    """
    Rows are samples; column 0 is the original, column k+1 the warp at alphas[k].

    Every row reuses one field across its alphas so the columns differ only
    in strength.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3 or images.shape[0] == 0:
        raise ParameterError(f"expected a nonempty (N, H, W) stack, got shape {images.shape}")
    if not alphas:
        raise ParameterError("at least one alpha is required")

    count, height, width = images.shape
    grid = np.zeros((count, len(alphas) + 1, height, width))
    for row, image in enumerate(images):
        field = generate_displacement_field(height, width, sigma, derive_seed(seed, row))
        grid[row, 0] = image
        for column, alpha in enumerate(alphas, start=1):
            grid[row, column] = elastic_warp(image, field, alpha)
    return grid


def render_warp_preview(
    images: np.ndarray,
    alphas: Sequence[float],
    sigma: float,
    seed: int,
    path: Path,
    zoom: int = 4,
) -> Path:
    """Write the preview grid as a grayscale PNG, each tile enlarged by zoom."""
    grid = warp_preview_grid(images, alphas, sigma, seed)
    rows, columns, height, width = grid.shape
    tile_h, tile_w = height * zoom, width * zoom

    sheet = Image.new("L", (columns * tile_w + (columns + 1) * _MARGIN, rows * tile_h + (rows + 1) * _MARGIN), 128)
    for row in range(rows):
        for column in range(columns):
            tile = Image.fromarray(quantize(grid[row, column])).resize((tile_w, tile_h), Image.NEAREST)
            sheet.paste(tile, (_MARGIN + column * (tile_w + _MARGIN), _MARGIN + row * (tile_h + _MARGIN)))

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        sheet.save(path, format="PNG")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    logger.info("warp_preview_written", path=str(path), samples=rows, alphas=list(alphas), sigma=sigma)
    return path
