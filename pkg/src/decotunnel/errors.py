"""Exception hierarchy shared by all modules."""


class DecotunnelError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DecotunnelError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(DecotunnelError, ArithmeticError):
    """A numerical procedure failed (non-convergence, singular system, ...)."""


class PoleError(NumericError):
    """Dispersion function evaluated on (or too close to) a cotangent pole."""


class RootFindingError(NumericError):
    def __init__(self, message, bracket):
        super().__init__(f"{message} (bracket={bracket!r})")
        self.bracket = bracket


class SingularBarrierError(NumericError):
    """Transfer matrix requested for an opaque barrier (q = 0)."""


class StepSizeError(NumericError):
    """Integrator step too large for the stated accuracy contract."""


class SelectionError(DecotunnelError):
    """Pre- and post-selected states give zero weight in every section."""


class InsufficientEventsError(DecotunnelError):
    """Horizon too short for the requested number of decoherence events."""


class DegenerateFrequencyError(NumericError):
    """Characteristic frequency collapsed to zero."""


class ConfigError(DecotunnelError):
    """Configuration failed validation; ``errors`` lists field-level problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
