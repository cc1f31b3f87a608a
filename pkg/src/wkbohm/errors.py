"""Exception types shared across the package."""


class WkbohmError(Exception):
    """Base class for all package errors."""


class ConfigError(WkbohmError):
    """Invalid, incomplete, or unknown run configuration."""


class NonFiniteFieldError(WkbohmError):
    """A grid field contains NaN or infinity.

    Carries the index of the first offending node so diagnostics can
    point at the grid location rather than just the array.
    """

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class NumericalAbort(WkbohmError):
    """A propagation was stopped before reaching its requested end time."""


class CflViolation(NumericalAbort):
    """Requested time step exceeds the advective stability bound."""


class CausticDetected(NumericalAbort):
    """A field gradient blew past the blow-up threshold (focal singularity)."""


class EdgeContamination(NumericalAbort):
    """Wavefunction amplitude at the grid edge is no longer negligible."""
