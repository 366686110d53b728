"""
Exception hierarchy shared by the solvers and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class FblscError(Exception):
    exit_code = 1


class ConfigError(FblscError):
    """Bad command or configuration input"""
    exit_code = 2

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class DomainError(ConfigError):
    """Argument outside the domain of a function"""


class SupportViolation(ConfigError):
    """A distribution puts mass where the reference distribution has none"""


class InfeasibleDistortion(ConfigError):
    """Distortion level below the smallest achievable value"""


class InfeasibleRate(ConfigError):
    """Rate constraint that no code can meet"""


class OutOfValidityRegion(ConfigError):
    """Parameters outside the region where a closed form holds"""

    def __init__(self, example, inequality):
        super().__init__(f"{example} requires {inequality}", key='params')
        self.example = example
        self.inequality = inequality


class CaseMismatch(ConfigError):
    """Requested region case disagrees with the rate placement"""


class MomentOrderViolation(ConfigError):
    """Fourth moment smaller than the squared second moment"""


class DegenerateChannel(ConfigError):
    """Channel with zero capacity"""


class ConvergenceFailure(FblscError):
    exit_code = 3

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class BudgetExceeded(FblscError):
    """Enumeration larger than the configured budget"""
    exit_code = 3


class SearchBudgetExceeded(BudgetExceeded):
    """Candidate search ended without a feasible point"""


class OutputError(FblscError):
    exit_code = 4
