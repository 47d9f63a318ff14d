from .nets import (
    ClassifierArch,
    ConvClassifier,
    ConvDenoiser,
    DenoiserArch,
    timestep_embedding,
)
from .training import Adam, train_classifier, train_denoiser
from .weights_io import WeightFormatError, load_weights, save_weights

__all__ = [
    "Adam",
    "ClassifierArch",
    "ConvClassifier",
    "ConvDenoiser",
    "DenoiserArch",
    "WeightFormatError",
    "load_weights",
    "save_weights",
    "timestep_embedding",
    "train_classifier",
    "train_denoiser",
]
