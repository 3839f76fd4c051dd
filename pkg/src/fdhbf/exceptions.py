"""Exception hierarchy shared by every module of the package."""


class FdhbfError(Exception):
    """Base class for all errors raised by fdhbf."""


class ParameterError(FdhbfError, ValueError):
    """A scalar argument is outside its admissible range."""


class ShapeError(FdhbfError, ValueError):
    """Matrix dimensions do not conform."""


class ConfigError(FdhbfError, ValueError):
    """Invalid simulation or codebook configuration."""


class GeometryError(FdhbfError, ValueError):
    """Array geometry is physically invalid (e.g. coincident elements)."""


class NumericFailure(FdhbfError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class DegenerateInputError(NumericFailure):
    """Input carries no usable energy (all-zero gains or channels)."""


class RankDeficiencyError(NumericFailure):
    """A matrix that must be positive definite is singular."""


class AcquisitionExhaustedError(FdhbfError, RuntimeError):
    """Not enough unused beam pairs remain to build a candidate."""
