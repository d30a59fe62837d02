"""Exception hierarchy shared by all cellring modules."""

from __future__ import annotations


class CellRingError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CellRingError, ValueError):
    """A parameter or state lies outside its admissible range."""


class RangeEscape(CellRingError):
    """An iterate left the open unit interval.

    Attributes
    ----------
    step : int or None
        1-based index of the map application that produced the bad state
        (``None`` for a single step evaluated outside ``simulate``).
    component : int
        0-based cell index of the offending component.
    value : float
        The escaped value.
    """

    def __init__(self, component: int, value: float, step: int | None = None):
        self.component = int(component)
        self.value = float(value)
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"component {self.component} left (0, 1){where}: value {self.value!r}"
        )


class NotConverged(CellRingError):
    """An iterative solver hit its iteration cap."""


class BoundaryEscape(NotConverged):
    """A fixed-point solve converged onto (or escaped through) the boundary of the unit cube."""


class SingularJacobian(CellRingError):
    """The Newton system is singular so no step can be taken."""


class SingularEntry(CellRingError, ValueError):
    """A Jacobian entry is undefined because the equilibrium touches 0 or 1."""


class DegenerateRange(CellRingError, ValueError):
    """A series has max == min and cannot be rescaled."""


class NumericalFailure(CellRingError):
    """Eigenvalue iteration failed to converge."""


class ConfigError(CellRingError, ValueError):
    """Invalid run configuration."""
