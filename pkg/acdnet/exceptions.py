"""Exceptions raised by acdnet."""
__author__ = "acdnet developers"
__license__ = "GPLv3"


class AcdnetError(Exception):
    """Base class for every error raised by acdnet."""


class ConfigError(AcdnetError, ValueError):
    """Invalid or infeasible configuration."""


class ContractError(AcdnetError, ValueError):
    """A function was called outside its pre-conditions."""


class DimensionError(AcdnetError, ValueError):
    """Tensor shapes do not agree."""


class BoundsError(AcdnetError, IndexError):
    """A code index is outside its vocabulary."""


class NumericGuardError(AcdnetError, ArithmeticError):
    """A numeric guard tripped (zero norm, NaN)."""


class DatasetError(AcdnetError, ValueError):
    """Malformed dataset, checkpoint or patient file."""


class IncompatibleCheckpointError(AcdnetError, ValueError):
    """Checkpoint and dataset disagree on vocabulary or graphs."""


class TrainingError(AcdnetError, RuntimeError):
    """Training diverged."""


class GradientCheckError(AcdnetError, AssertionError):
    """Autodiff and finite differences disagree."""
