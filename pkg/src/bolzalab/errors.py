"""Exception types raised by the lab modules."""


class LabError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 2


class ConstructionError(LabError):
    pass


class IterationCap(LabError):
    pass


class DegreeError(LabError, ValueError):
    pass


class IllConditioned(LabError):
    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class BudgetExceeded(LabError):
    exit_code = 4


class NotHyperbolic(LabError, ValueError):
    pass


class QuadratureNotConverged(LabError):
    pass


class RankDeficientCensus(LabError):
    exit_code = 4


class VarianceBudget(LabError):
    exit_code = 4


class ExtrapolationUnstable(LabError):
    pass


class ConfigError(LabError, ValueError):
    exit_code = 3
