"""Exception types shared across the package."""


class NeurovalError(Exception):
    """Base class for all package errors."""


class DimensionError(NeurovalError):
    """Model or data dimensions are inconsistent or out of order."""


class MisalignmentError(NeurovalError):
    """Requested misalignment exceeds the task vector norm."""


class SingularDesignError(NeurovalError):
    """A design matrix is (numerically) rank deficient for the requested fit."""


class RankError(NeurovalError):
    """A matrix does not have the rank an operation requires."""


class OutOfRegimeError(NeurovalError):
    """Sample counts are outside the regime where a closed form is defined."""


class DegenerateScheduleError(NeurovalError):
    """The optimal-penalty schedule is undefined (nonpositive denominator)."""


class InversionError(NeurovalError):
    """A risk value cannot be inverted into an equivalent sample count."""


class BudgetTooSmallError(NeurovalError):
    """No feasible allocation exists under the given budget."""


class ConfigError(NeurovalError):
    """An experiment or model config is malformed."""
