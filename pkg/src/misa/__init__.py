"""Modality-invariant and -specific representations for multimodal sentiment analysis, in numpy."""

from .config import CmdConfig, ConfigError, LossWeights, ModelConfig, RunConfig, TrainConfig
from .data import DatasetSplits, SynthConfig, generate_synthetic, load_dataset, save_dataset
from .gradcheck import grad_check
from .model import MISA, build_variant
from .tensor import Tensor
from .training import evaluate, train

__version__ = "0.1.0"

__all__ = [
    "CmdConfig", "ConfigError", "DatasetSplits", "LossWeights", "MISA", "ModelConfig", "RunConfig",
    "SynthConfig", "Tensor", "TrainConfig", "build_variant", "evaluate", "generate_synthetic",
    "grad_check", "load_dataset", "save_dataset", "train",
]
