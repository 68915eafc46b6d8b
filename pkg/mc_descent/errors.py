"""Exception hierarchy shared by the optimizer engine and the harness."""


class MctdError(Exception):
    """Base class for every error raised by mc_descent."""


class ContractViolationError(MctdError, ValueError):
    """An argument broke a precondition, e.g. a point of the wrong dimension."""


class InsufficientDataError(MctdError, ValueError):
    """Too few samples to fit a surrogate."""


class IllConditionedError(MctdError, ArithmeticError):
    """Covariance factorization failed even at the largest jitter."""


class BudgetExhaustedError(MctdError):
    """The objective's hard evaluation cap has been reached."""


class ConfigError(MctdError, ValueError):
    """Invalid or unknown configuration (benchmark, algorithm, file)."""


class AggregationError(MctdError, ValueError):
    """Traces cannot be aggregated together."""


class TraceIOError(MctdError, OSError):
    """Reading or writing trace files failed."""


__all__ = [
    "MctdError",
    "ContractViolationError",
    "InsufficientDataError",
    "IllConditionedError",
    "BudgetExhaustedError",
    "ConfigError",
    "AggregationError",
    "TraceIOError",
]
