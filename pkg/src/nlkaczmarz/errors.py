"""Exception types shared across the solver library."""


class NlkError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(NlkError):
    """A vector's length does not match the system's m or n."""


class NonFiniteValue(NlkError):
    """An evaluation produced (or received) NaN or Inf."""


class IndexOutOfRange(NlkError):
    """A row index lies outside [0, m)."""


class ZeroResidual(NlkError):
    """A selection rule was asked to pick a row from an all-zero residual."""


class ZeroGradientRow(NlkError):
    """A selected row has a zero gradient, so its projection is undefined."""


class ZeroDirection(NlkError):
    """The aggregated block direction vanished (stationary point of the block objective)."""


class InvalidDimension(NlkError):
    """A problem size violates the component period of its defining formulas."""


class InconsistentSystem(NlkError):
    """The right-hand side of a synthetic linear system is not in the range of its matrix."""


class MissingBaseline(NlkError):
    """Speed-up ratios were requested but the baseline run is absent or unconverged."""


class IoFailure(NlkError):
    """Writing benchmark outputs failed."""
