"""Registry mapping classifier keys to their trainer and config model."""
from typing import Callable, NamedTuple

from src.classifiers.elm import train_elm
from src.classifiers.mlp import train_mlp
from src.classifiers.svm import train_svm
from src.core.errors import ParameterError
from src.core.params import ElmConfig, MlpConfig, Params, SvmConfig
from src.core.types import FeatureSet, TrainedModel


class ClassifierEntry(NamedTuple):
    name: str
    trainer: Callable[[FeatureSet, Params], TrainedModel]
    config_class: type
    uses_seed: bool


# Central registry of all supported classifier heads
CLASSIFIER_REGISTRY = {
    "mlp": ClassifierEntry("CNN (MLP head)", train_mlp, MlpConfig, uses_seed=True),
    "svm": ClassifierEntry("CSVM", train_svm, SvmConfig, uses_seed=False),
    "elm": ClassifierEntry("CELM", train_elm, ElmConfig, uses_seed=True),
}


def get_classifier(kind: str) -> ClassifierEntry:
    """
    Get registry entry for a classifier key.

    Raises:
        ParameterError: unknown key
    """
    entry = CLASSIFIER_REGISTRY.get(kind)
    if entry is None:
        raise ParameterError(f"unknown classifier {kind!r}; expected one of {sorted(CLASSIFIER_REGISTRY)}")
    return entry


def get_classifier_list() -> list[dict[str, str]]:
    """Get list of all available classifiers with their display names."""
    return [{"key": key, "name": entry.name} for key, entry in CLASSIFIER_REGISTRY.items()]
