# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""ReNet: recurrent sweeps over image patches as an alternative to convolution."""

from renet.config import ModelConfig, load_config
from renet.model import ReNetModel, build_model

__version__ = "v0.2.0"

__all__ = ["ModelConfig", "ReNetModel", "build_model", "load_config", "__version__"]
