"""Exception hierarchy shared by all modules."""


class TransinfoError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionMismatch(TransinfoError):
    pass


class InvalidInput(TransinfoError):
    """An object failed its construction-time invariants."""


class ConstraintViolation(TransinfoError):
    """A potential pair or test function violates its admissibility constraint."""


class NotIrreducible(TransinfoError):
    pass


class UnsupportedExact(TransinfoError):
    pass


class GammaDivergent(TransinfoError):
    """The integral defining gamma diverges at the origin."""


class D1Divergent(TransinfoError):
    """The speed measure is not normalizable."""


class IntegrabilityFailed(TransinfoError):
    pass


class UnverifiedConstants(TransinfoError):
    """Phi-Sobolev constants failed verification; carries the violating report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(TransinfoError):
    pass
