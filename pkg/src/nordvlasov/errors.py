"""Exception hierarchy. The CLI maps each family to an exit code."""


class NordVlasovError(Exception):
    """Base class for all package errors."""


class ConfigError(NordVlasovError, ValueError):
    """Invalid configuration or violated setup invariant (exit code 1)."""


class InputError(NordVlasovError, ValueError):
    """Non-finite or malformed numerical input."""


class WindowError(NordVlasovError, ValueError):
    """A field sampler was asked for a point outside its declared window."""


class RuntimeAbort(NordVlasovError, RuntimeError):
    """A run had to stop mid-way (exit code 2).

    ``last_state`` holds the last valid state when one exists.
    """

    def __init__(self, message, last_state=None, records=None):
        super().__init__(message)
        self.last_state = last_state
        self.records = records if records is not None else []


class DomainExhausted(RuntimeAbort):
    """Support of f (or of the source) reached the edge of the lattice."""


class NonFiniteState(RuntimeAbort):
    """NaN or inf appeared in the evolved state."""


class ResolutionLost(RuntimeAbort):
    """A conserved quantity drifted past tolerance, e.g. on approach to blow-up."""


class PropertyViolation(NordVlasovError, AssertionError):
    """A checked inequality or identity failed (exit code 3)."""
