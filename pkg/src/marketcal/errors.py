"""Exception hierarchy.

Two branches matter for the CLI exit codes: InputError (bad data or
arguments, exit 1) and NumericalError (a computation failed, exit 2).
"""


class MarketCalError(Exception):
    """Base class for all package errors."""


class InputError(MarketCalError):
    """Malformed or inconsistent input data."""


class InsufficientDataError(InputError):
    """Too few observations for the requested operation."""


class NumericalError(MarketCalError):
    """A numerical procedure failed or is undefined for the input."""


class SimulationDivergedError(NumericalError):
    """The price recurrence produced a non-finite value."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"simulation diverged at step {step}")


class DegenerateModelError(NumericalError):
    """State-space model with no noise cannot explain a changing series."""


class ConstantSeriesError(NumericalError):
    """Statistic undefined for a constant series (zero variance)."""
