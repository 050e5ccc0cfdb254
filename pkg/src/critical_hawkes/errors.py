"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class CriticalHawkesError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CriticalHawkesError, ValueError):
    """An argument lies outside the domain of a function."""


class ConfigError(CriticalHawkesError, ValueError):
    """Invalid experiment configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class RegimeError(CriticalHawkesError):
    """The model does not satisfy the assumptions of the requested regime."""

    def __init__(self, regime: str, assumption: str):
        self.regime = regime
        self.assumption = assumption
        super().__init__(f"regime {regime!r} requires: {assumption}")


class NumericalError(CriticalHawkesError):
    """Base class for solver failures (CLI exit code 3)."""


class ConvergenceError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


class BoundViolation(NumericalError):
    pass


class ResidualError(NumericalError):
    pass


class HorizonError(CriticalHawkesError, ValueError):
    """A tabulated object does not cover the requested time range."""


class BudgetExhausted(NumericalError):
    """A simulated path exceeded its event budget.

    ``report`` is the :class:`~critical_hawkes.simulator.TruncationReport` of
    the failing path and ``replica`` its index when known.
    """

    def __init__(self, report, replica: int | None = None):
        self.report = report
        self.replica = replica
        where = f" (replica {replica})" if replica is not None else ""
        super().__init__(
            f"event budget {report.budget} exhausted{where}; "
            f"at least {report.events_dropped_lower_bound} events dropped"
        )
