"""
Exception and warning types shared by the simulator.

Every error carries a stable ``error_class`` string. The CLI prints it in its
machine-readable error line and the HTTP layer returns it in the error payload.
"""


class EITError(Exception):
    """Base class for all simulator errors."""

    error_class = "EITError"


class SimulationError(EITError, ValueError):
    """A domain computation could not be carried out for the given inputs."""

    error_class = "SimulationError"


class SingularSystem(SimulationError):
    """The trace-constrained steady-state system is rank-deficient."""

    error_class = "SingularSystem"


class StepTooLarge(SimulationError):
    """The integrator step violates the stability bound."""

    error_class = "StepTooLarge"


class PositivityLost(SimulationError):
    """The evolved density matrix acquired a negative eigenvalue."""

    error_class = "PositivityLost"


class ZeroProbe(SimulationError):
    """Transmission from the coherence needs a non-zero probe amplitude."""

    error_class = "ZeroProbe"


class DegenerateDenominator(SimulationError):
    """A closed-form transmission formula hit its pole."""

    error_class = "DegenerateDenominator"


class EmptySweep(SimulationError):
    """A sweep has no valid points to summarise."""

    error_class = "EmptySweep"


class GridTooCoarse(SimulationError):
    """Two spectral minima are too close on the grid to be told apart."""

    error_class = "GridTooCoarse"


class BadTrace(SimulationError):
    """A transmission trace violates its invariants."""

    error_class = "BadTrace"


class ConfigError(EITError):
    """The run configuration could not be parsed or validated."""

    error_class = "ConfigError"


class IoError(EITError):
    """Reading or writing a data file failed."""

    error_class = "IoError"


class IdentifiabilityWarning(UserWarning):
    """Fitted parameters are not separable from the data."""


class NotConvergedWarning(UserWarning):
    """The least-squares iteration stopped before meeting its tolerance."""


class PositivityWarning(UserWarning):
    """A state left the physical state space because the atom's rates allow it."""
