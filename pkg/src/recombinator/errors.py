"""Shared exception types."""


class RecombinatorError(Exception):
    """Base class for all package errors."""


class ShapeError(RecombinatorError):
    """Mismatched or invalid product-space shapes."""


class InvalidDistributionError(RecombinatorError):
    """Probability array violating non-negativity or normalization."""


class InvalidMeasureError(RecombinatorError):
    """Recombination measure with invalid atoms."""


class CapExceededError(RecombinatorError):
    """A size/memory cap of some module was exceeded.

    Exact computations are refused, never approximated, beyond the caps.
    """

    def __init__(self, module: str, message: str):
        self.module = module
        super().__init__(f"[{module}] {message}")


class EmptySectorError(RecombinatorError):
    """Conditioning event with zero probability (empty or unreachable sector)."""


class StepSizeError(RecombinatorError):
    """ODE step size out of range."""


class SingularCovarianceError(RecombinatorError):
    """Covariance eigenvalue below the inversion floor."""
