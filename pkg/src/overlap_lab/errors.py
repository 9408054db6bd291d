"""
Exception hierarchy for overlap-lab
"""


class OverlapLabError(Exception):
    """Base class for all errors raised by overlap-lab"""


class InvalidPositionError(OverlapLabError, ValueError):
    """A factor coordinate, flat index or factor number is out of range"""


class InvalidParamsError(OverlapLabError, ValueError):
    """Dataset or loss parameters violate their constraints"""


class NpyFormatError(OverlapLabError, ValueError):
    """An NPY file could not be parsed"""


class ShapeMismatchError(OverlapLabError, ValueError):
    """Two arrays that must agree in shape (or channel count) do not"""


class DegenerateStatsError(OverlapLabError, ValueError):
    """Channel statistics with a zero standard deviation"""


class EmptyDatasetError(OverlapLabError, ValueError):
    """An operation needs at least one observation"""


class ConfigError(OverlapLabError, ValueError):
    """An experiment config, grid or manifest is invalid"""


class TrainingDivergedError(OverlapLabError, RuntimeError):
    """A loss or activation became non-finite during training"""

    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message)
        self.step = step
