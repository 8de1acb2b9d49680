"""Configuration management for warpbench."""
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = Path(os.getenv("WARPBENCH_DATA", str(BASE_DIR / "data" / "mnist")))
CACHE_DIR = Path(os.getenv("WARPBENCH_CACHE", str(BASE_DIR / "data" / "cache")))
OUTPUT_DIR = Path(os.getenv("WARPBENCH_OUT", str(BASE_DIR / "data" / "results")))

# Official MNIST file names (uncompressed)
TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"

# Experiment defaults
DEFAULT_SEED = int(os.getenv("WARPBENCH_SEED", "0"))
DEFAULT_THREADS = int(os.getenv("WARPBENCH_THREADS", "1"))
DEFAULT_REPEATS = 3
DEFAULT_SWEEP_POINTS = (500, 1000, 2500, 5000)
REAL_POOL_PER_CLASS = 500

# Desk-scale MLP settings; --fidelity restores 2000 full-batch epochs
DESK_MLP_EPOCHS = int(os.getenv("WARPBENCH_MLP_EPOCHS", "200"))
DESK_MLP_BATCH = 128
FIDELITY_MLP_EPOCHS = 2000

# Logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE_PATH = os.getenv("LOG_FILE_PATH", "")


def dataset_paths(data_dir: Path = None) -> dict[str, Path]:
    """Resolve the four MNIST files under a dataset directory."""
    root = Path(data_dir) if data_dir else DATA_DIR
    return {
        "train_images": root / TRAIN_IMAGES,
        "train_labels": root / TRAIN_LABELS,
        "test_images": root / TEST_IMAGES,
        "test_labels": root / TEST_LABELS,
    }


def validate_config(data_dir: Path = None) -> list[str]:
    """
    Validate required configuration settings.

    Returns:
        List of error messages for missing/invalid config.
    """
    errors = []

    for name, path in dataset_paths(data_dir).items():
        if not path.exists():
            errors.append(f"missing dataset file for {name}: {path}")

    if LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR"):
        errors.append(f"Invalid LOG_LEVEL: {LOG_LEVEL}. Must be DEBUG, INFO, WARNING or ERROR")

    if DEFAULT_THREADS < 1:
        errors.append(f"WARPBENCH_THREADS must be >= 1, got {DEFAULT_THREADS}")

    return errors
