"""Temporal-spatial feature pyramid network for video saliency prediction."""

from .config import AudioConfig, EncoderConfig, ModelConfig, PyramidConfig, TrainConfig, toy_model_config
from .model import TSFPNet, model_forward
from .tensor import Tensor, precision

__all__ = [
    "AudioConfig",
    "EncoderConfig",
    "ModelConfig",
    "PyramidConfig",
    "TSFPNet",
    "Tensor",
    "TrainConfig",
    "model_forward",
    "precision",
    "toy_model_config",
]
__version__ = "0.1.0"
