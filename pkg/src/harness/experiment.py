"""Experiment configuration and result records."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field, field_validator, model_validator

from src import config
from src.core.params import (
    AffineRanges,
    DbsmoteParams,
    ElasticParams,
    ElmConfig,
    FeatureStageConfig,
    MlpConfig,
    Params,
    SmoteParams,
    SvmConfig,
)

RecipeName = Literal["baseline", "elastic", "smote", "dbsmote"]
ClassifierName = Literal["mlp", "svm", "elm"]

# Harness-scale MLP; keys a file or flag leaves unset keep these values
DESK_MLP = {"epochs": config.DESK_MLP_EPOCHS, "batch_size": config.DESK_MLP_BATCH}


def _split_list(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class ExperimentConfig(Params):
    """Everything a sweep needs; dotted config-file keys map onto the nested sections."""

    data_dir: Optional[Path] = None
    out_dir: Path = config.OUTPUT_DIR
    cache_dir: Path = config.CACHE_DIR

    classifiers: list[ClassifierName] = ["elm"]
    recipes: list[RecipeName] = ["baseline"]
    points: list[int] = list(config.DEFAULT_SWEEP_POINTS)
    repeats: int = Field(default=config.DEFAULT_REPEATS, ge=1)
    master_seed: int = Field(default=config.DEFAULT_SEED, ge=0)
    threads: int = Field(default=config.DEFAULT_THREADS, ge=1)
    real_pool_per_class: int = Field(default=config.REAL_POOL_PER_CLASS, ge=1)

    features: FeatureStageConfig = FeatureStageConfig()
    elastic: ElasticParams = ElasticParams()
    affine: bool = False
    affine_ranges: AffineRanges = AffineRanges()
    smote: SmoteParams = SmoteParams()
    dbsmote: DbsmoteParams = DbsmoteParams()
    # SMOTE/DBSMOTE run on raw extracted features or on standardized ones
    oversample_space: Literal["raw", "standardized"] = "raw"

    mlp: MlpConfig = MlpConfig(**DESK_MLP)
    svm: SvmConfig = SvmConfig()
    elm: ElmConfig = ElmConfig()
    svm_c_candidates: list[float] = []
    record_timing: bool = False

    @field_validator("classifiers", "recipes", "points", "svm_c_candidates", mode="before")
    @classmethod
    def _comma_lists(cls, value):
        return _split_list(value)

    @field_validator("mlp", mode="before")
    @classmethod
    def _desk_mlp_defaults(cls, value):
        if isinstance(value, dict):
            return {**DESK_MLP, **value}
        return value

    @model_validator(mode="after")
    def _check_sweep(self):
        if not self.points:
            raise ValueError("points must not be empty")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ValueError(f"points must be strictly increasing, got {self.points}")
        if self.points[0] < 1:
            raise ValueError("points must be >= 1 sample per class")
        augmented = [r for r in self.recipes if r != "baseline"]
        if augmented and self.points[0] < self.real_pool_per_class:
            raise ValueError(
                f"augmented recipes start from {self.real_pool_per_class} real samples per class; "
                f"point {self.points[0]} is smaller"
            )
        return self

    def classifier_config(self, kind: str) -> Params:
        return getattr(self, kind)


@dataclass(frozen=True)
class ExperimentResult:
    """One sweep point: a trained classifier evaluated on its training set and the test set."""

    classifier: str
    recipe: str
    n_per_class: int
    repeat: int
    seed: int
    train_error_percent: float
    test_error_percent: float
    # Timing varies run to run and is left out of equality
    wall_time_s: float = field(compare=False)
    config_echo: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def gap(self) -> float:
        """Overfitting gap: test minus train error %."""
        return self.test_error_percent - self.train_error_percent
