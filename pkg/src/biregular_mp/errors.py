"""Exception hierarchy.

The three base classes map onto CLI exit codes: ``ConfigError`` (2),
``NumericFailure`` (3) and ``GuardExceeded`` (4).
"""


class BiregularError(Exception):
    pass


class ConfigError(BiregularError, ValueError):
    pass


class EdgeCountMismatch(ConfigError):
    pass


class OrientationError(ConfigError):
    pass


class InfeasibleDegree(ConfigError):
    pass


class InvalidGraph(ConfigError):
    pass


class DegenerateGraph(ConfigError):
    """Fewer than two edges avoid the switching vertex."""


class GuardExceeded(BiregularError):
    pass


class TooLarge(GuardExceeded):
    pass


class NumericFailure(BiregularError, ArithmeticError):
    pass


class ConvergenceFailure(NumericFailure):
    pass


class PoleProximity(NumericFailure):
    pass


class BranchAmbiguity(NumericFailure):
    pass


class QuadratureFailure(NumericFailure):
    pass


class MismatchReport(NumericFailure):
    """An exact identity failed; ``failures`` lists the offending items."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))
