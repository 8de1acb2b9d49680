"""Typed, validated parameter objects for every stage."""
import math
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.errors import ParameterError


class Params(BaseModel):
    """Frozen pydantic model that reports invalid values as ParameterError."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            raise ParameterError(f"invalid {type(self).__name__}: {e}") from e

    def echo(self, prefix: str = "") -> dict[str, str]:
        """Flatten to dotted key=value strings for result and model metadata."""
        flat = {}
        for key, value in self.model_dump().items():
            flat[f"{prefix}{key}"] = str(value)
        return flat


class ClassBalanceSpec(Params):
    per_class_count: int = Field(ge=0)
    seed: int = Field(ge=0, lt=2 ** 64)


class ElasticParams(Params):
    alpha: float = Field(default=1.2, ge=0.0)
    sigma: float = Field(default=20.0, gt=0.0)


class AffineParams(Params):
    rotation: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0
    translate_x: float = 0.0
    translate_y: float = 0.0
    scale: float = Field(default=1.0, gt=0.0)


class AffineRanges(Params):
    """Closed intervals from which affine parameters are drawn uniformly."""

    rotation: tuple[float, float] = (-0.26, 0.26)
    shear_x: tuple[float, float] = (-0.15, 0.15)
    shear_y: tuple[float, float] = (-0.15, 0.15)
    translate_x: tuple[float, float] = (-2.0, 2.0)
    translate_y: tuple[float, float] = (-2.0, 2.0)
    scale: tuple[float, float] = (0.9, 1.1)

    @field_validator("*", mode="before")
    @classmethod
    def _split_pairs(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(",")]
        return value

    @model_validator(mode="after")
    def _check_intervals(self):
        for name in type(self).model_fields:
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} interval is empty: ({low}, {high})")
        if self.scale[0] <= 0:
            raise ValueError("scale interval must stay above 0")
        return self


class PoolingConfig(Params):
    q: int = Field(default=8, ge=1)
    stride: int = Field(default=2, ge=1)
    p: float = Field(default=2.0, ge=1.0)

    @model_validator(mode="after")
    def _stride_within_window(self):
        if self.stride > self.q:
            raise ValueError(f"stride {self.stride} exceeds pool window {self.q}")
        return self

    @property
    def is_max(self) -> bool:
        return math.isinf(self.p)


class FeatureStageConfig(Params):
    filter_size: int = Field(default=7, ge=1)
    filter_count: int = Field(default=96, ge=1)
    filter_seed: int = Field(default=0, ge=0)
    filter_bank_path: Optional[str] = None
    pooling: PoolingConfig = PoolingConfig()


class SmoteParams(Params):
    k: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0)


class DbsmoteParams(Params):
    k: int = Field(default=2, ge=1)
    eps: float = Field(default=4.0, gt=0.0)
    seed: int = Field(default=0, ge=0)


class MlpConfig(Params):
    hidden_units: int = Field(default=1600, ge=1)
    epochs: int = Field(default=2000, ge=0)
    learning_rate: float = Field(default=0.1, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    batch_size: Union[int, Literal["full"]] = 128
    seed: int = Field(default=0, ge=0)

    @field_validator("batch_size")
    @classmethod
    def _positive_batch(cls, value):
        if value != "full" and value < 1:
            raise ValueError("batch_size must be >= 1 or 'full'")
        return value


class SvmConfig(Params):
    C: float = Field(default=1.0, gt=0.0)
    max_iterations: int = Field(default=200, ge=0)
    tolerance: float = Field(default=1e-4, gt=0.0)


class ElmConfig(Params):
    hidden_units: int = Field(default=1600, ge=1)
    ridge: float = Field(default=1e-3, ge=0.0)
    seed: int = Field(default=0, ge=0)
