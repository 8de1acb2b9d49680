"""Training-data recipes: how each sweep point's training set is built."""
from typing import Optional

from src.augment.oversample import oversample_to_count
from src.core.types import FeatureSet, Standardizer
from src.features.stage import apply_standardizer, concat_features, fit_standardizer


class BaselineRecipe:
    """n real samples per class, drawn from the full training set."""

    @staticmethod
    def build(context, point: int, repeat: int, seed: int) -> tuple[FeatureSet, Optional[Standardizer]]:
        return context.baseline_features(point, repeat), None

    @staticmethod
    def describe(config) -> dict[str, str]:
        return {"recipe.source": "full_training_set"}


class ElasticRecipe:
    """The fixed real pool plus (n - pool) warped samples per class, generated off-line."""

    @staticmethod
    def build(context, point: int, repeat: int, seed: int) -> tuple[FeatureSet, Optional[Standardizer]]:
        pool = context.pool_features()
        if point == context.config.real_pool_per_class:
            return pool, None
        return concat_features([pool, context.warped_features(point, repeat)]), None

    @staticmethod
    def describe(config) -> dict[str, str]:
        echo = config.elastic.echo("elastic.")
        echo["elastic.affine"] = str(config.affine)
        if config.affine:
            echo.update(config.affine_ranges.echo("affine."))
        return echo


class _OversampleRecipe:
    """The fixed real pool topped up online with synthetic feature vectors."""

    method = None

    @classmethod
    def params(cls, config, seed: int):
        base = getattr(config, cls.method)
        return type(base)(**{**base.model_dump(), "seed": seed})

    @classmethod
    def build(cls, context, point: int, repeat: int, seed: int) -> tuple[FeatureSet, Optional[Standardizer]]:
        pool = context.pool_features()
        params = cls.params(context.config, seed)
        if context.config.oversample_space == "standardized":
            standardizer = fit_standardizer(pool)
            real = apply_standardizer(standardizer, pool)
            return oversample_to_count(real, point, cls.method, params), standardizer
        return oversample_to_count(pool, point, cls.method, params), None

    @classmethod
    def describe(cls, config) -> dict[str, str]:
        echo = getattr(config, cls.method).echo(f"{cls.method}.")
        echo[f"{cls.method}.space"] = config.oversample_space
        return echo


class SmoteRecipe(_OversampleRecipe):
    method = "smote"


class DbsmoteRecipe(_OversampleRecipe):
    method = "dbsmote"


# Central registry of all supported recipes
RECIPE_REGISTRY = {
    "baseline": BaselineRecipe,
    "elastic": ElasticRecipe,
    "smote": SmoteRecipe,
    "dbsmote": DbsmoteRecipe,
}
