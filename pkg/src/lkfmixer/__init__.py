"""LKFMixer: large-kernel lightweight super-resolution on a numpy engine."""

from .model import ModelConfig, ParamStore, forward_model, init_params, preset
from .tensor import Tensor

__all__ = ["ModelConfig", "ParamStore", "Tensor", "forward_model", "init_params", "preset"]
__version__ = "0.1.0"
