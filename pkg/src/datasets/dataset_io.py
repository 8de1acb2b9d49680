"""IDX ingestion, class-balanced subsets and the image-set cache."""
import struct
from pathlib import Path

import numpy as np

from src import config
from src.core.errors import (
    ConsistencyError,
    FormatError,
    InsufficientDataError,
    IoError,
    ParameterError,
    TruncationError,
)
from src.core.params import ClassBalanceSpec
from src.core.types import LabeledImageSet
from src.utils.envelope import read_envelope, write_envelope
from src.utils.logging_config import logger
from src.utils.rng import make_rng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

CACHE_MAGIC = b"WBIMGSET"
CACHE_VERSION = 1


def _read_bytes(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e


def _parse_idx(path: Path, expected_magic: int, dims: int) -> tuple[tuple[int, ...], np.ndarray]:
    # [magic][count][dim...] as big-endian uint32, then unsigned bytes
    data = _read_bytes(path)
    header_size = 4 * (1 + dims)
    if len(data) < 4:
        raise TruncationError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    if len(data) < header_size:
        raise TruncationError(f"{path}: file ends inside the IDX header")
    shape = struct.unpack(f">{dims}I", data[4:header_size])
    expected = int(np.prod(shape, dtype=np.int64))
    if len(data) - header_size < expected:
        raise TruncationError(
            f"{path}: {len(data) - header_size} payload bytes, header announces {expected}"
        )
    payload = np.frombuffer(data, dtype=np.uint8, count=expected, offset=header_size)
    return shape, payload.reshape(shape)


def load_idx(images_path: Path, labels_path: Path, class_count: int = None) -> LabeledImageSet:
    """
    Parse an IDX image file and its label file.

    Args:
        images_path: idx3 image file (magic 0x00000803)
        labels_path: idx1 label file (magic 0x00000801)
        class_count: Number of classes; inferred as max(label) + 1 when omitted

    Returns:
        LabeledImageSet with pixels scaled to [0, 1]
    """
    (count, rows, cols), pixels = _parse_idx(images_path, IDX_IMAGE_MAGIC, 3)
    (label_count,), labels = _parse_idx(labels_path, IDX_LABEL_MAGIC, 1)
    if count != label_count:
        raise ConsistencyError(
            f"{images_path} holds {count} images but {labels_path} holds {label_count} labels"
        )

    if class_count is None:
        class_count = int(labels.max()) + 1 if label_count else 1

    images = pixels.astype(np.float64) / 255.0
    logger.info("idx_loaded", path=str(images_path), count=count, height=rows, width=cols)
    return LabeledImageSet(images, labels.astype(np.int64), class_count)


def load_mnist(data_dir: Path = None) -> tuple[LabeledImageSet, LabeledImageSet]:
    """Load the official train and test splits from a dataset directory."""
    paths = config.dataset_paths(data_dir)
    for name, path in paths.items():
        if not path.exists():
            raise IoError(f"missing dataset file for {name}: {path}")
    train = load_idx(paths["train_images"], paths["train_labels"], class_count=10)
    test = load_idx(paths["test_images"], paths["test_labels"], class_count=10)
    return train, test


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: Path, labels_path: Path) -> None:
    """Write uint8 images (N, H, W) and labels (N,) as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    try:
        with open(images_path, "wb") as f:
            f.write(struct.pack(">4I", IDX_IMAGE_MAGIC, *images.shape))
            f.write(images.tobytes())
        with open(labels_path, "wb") as f:
            f.write(struct.pack(">2I", IDX_LABEL_MAGIC, labels.shape[0]))
            f.write(labels.tobytes())
    except OSError as e:
        raise IoError(f"cannot write IDX files: {e}") from e


def balanced_subset(source: LabeledImageSet, spec: ClassBalanceSpec) -> LabeledImageSet:
    """
    Draw exactly spec.per_class_count samples of every class without replacement.

    Each class draws from its own PCG64 stream (seed, class id), so a class's
    selection does not depend on the other classes, and for a fixed seed the
    subset for a smaller count is contained in the subset for a larger one.
    The result is ordered by class, then by source index.
    """
    return source.take(balanced_indices(source, spec))


def balanced_indices(source: LabeledImageSet, spec: ClassBalanceSpec) -> np.ndarray:
    """Source indices selected by balanced_subset, in output order."""
    selected = []
    for class_id in range(source.class_count):
        members = np.flatnonzero(source.labels == class_id)
        if members.size < spec.per_class_count:
            raise InsufficientDataError(
                f"class {class_id} has {members.size} samples, {spec.per_class_count} requested",
                class_id=class_id,
            )
        # A prefix of a seeded permutation: smaller counts select nested subsets.
        order = make_rng(spec.seed, class_id).permutation(members.size)
        selected.append(np.sort(members[order[:spec.per_class_count]]))
    if not selected:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(selected).astype(np.int64)


def quantize(images: np.ndarray) -> np.ndarray:
    """Map [0, 1] pixels to the byte values stored in caches."""
    return np.clip(np.rint(np.asarray(images) * 255.0), 0, 255).astype(np.uint8)


def save_image_cache(image_set: LabeledImageSet, path: Path) -> None:
    """Persist a set as bytes: header (count, height, width, class_count), labels, pixels."""
    if image_set.class_count > 256:
        raise ParameterError(f"image cache stores labels as bytes; class_count {image_set.class_count} exceeds 256")
    count, height, width = image_set.images.shape
    payload = image_set.labels.astype(np.uint8).tobytes() + quantize(image_set.images).tobytes()
    write_envelope(path, CACHE_MAGIC, CACHE_VERSION, (count, height, width, image_set.class_count), payload)
    logger.debug("image_cache_written", path=str(path), count=count)


def load_image_cache(path: Path) -> LabeledImageSet:
    header, payload = read_envelope(
        path,
        CACHE_MAGIC,
        CACHE_VERSION,
        header_len=4,
        payload_size=lambda h: h[0] + h[0] * h[1] * h[2],
    )
    count, height, width, class_count = header
    labels = np.frombuffer(payload[:count], dtype=np.uint8).astype(np.int64)
    pixels = np.frombuffer(payload[count:], dtype=np.uint8).reshape(count, height, width)
    return LabeledImageSet(pixels.astype(np.float64) / 255.0, labels, class_count)


def cache_roundtrip(image_set: LabeledImageSet, path: Path) -> LabeledImageSet:
    """Write a set to the cache format and read it back."""
    save_image_cache(image_set, path)
    return load_image_cache(path)
