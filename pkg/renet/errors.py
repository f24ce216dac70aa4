# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Exception types raised by the renet package.

Every error derives from ``RenetError`` and from the builtin exception a
caller would naturally catch (``ValueError`` for bad inputs, ``RuntimeError``
for failed runs), so ``except ValueError`` keeps working.
"""


class RenetError(Exception):
    """Base class for all renet errors"""


class ShapeError(RenetError, ValueError):
    """Tensor extents do not fit the operation"""


class DTypeError(RenetError, TypeError):
    """Mixed f32/f64 operands; conversions must be explicit"""


class ConfigError(RenetError, ValueError):
    """Invalid model or training configuration"""


class LabelError(RenetError, ValueError):
    """Class label outside [0, K)"""


class NonFiniteError(RenetError, ArithmeticError):
    """NaN or Inf where finite values are required"""


class CacheMismatchError(RenetError, ValueError):
    """Backward pass called with a cache from a different forward call"""


class StaleStateError(RenetError, RuntimeError):
    """Layer state already consumed by a backward pass"""


class CheckpointMismatchError(RenetError, ValueError):
    """Checkpoint does not belong to the configured model"""


class TrainingDivergedError(RenetError, RuntimeError):
    """Training produced a non-finite loss"""


class GradcheckFailure(RenetError, AssertionError):
    """Analytic and numerical gradients disagree"""


class FormatError(RenetError, ValueError):
    """Malformed dataset or checkpoint file

    Args:
        message (str): What is wrong
        offset (int): Byte offset where the problem was detected
    """

    def __init__(self, message: str, offset: int = 0) -> None:
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class PreprocessingError(RenetError, ValueError):
    """A whitening or normalization transform cannot be fitted"""


class EmptyDatasetError(RenetError, ValueError):
    """A split with no examples was passed where metrics need at least one"""
