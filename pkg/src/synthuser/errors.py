"""Exception types shared across the package."""


class SynthUserError(Exception):
    """Base class for all errors raised by this package."""


class ComponentIdError(SynthUserError):
    """A component id is structurally invalid or cannot be parsed."""


class SequencingError(SynthUserError):
    """An event arrived out of order for its session."""


class TraceFormatError(SynthUserError):
    """A trace file line (or its header) is malformed."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class TraceIntegrityError(SynthUserError):
    """A loaded trace violates sequencing or uniqueness invariants."""


class TrackingError(SynthUserError):
    """The action completed but its event could not be logged."""


class UnavailableActionError(SynthUserError):
    """The requested component/kind is not actionable in the current view."""


class InvalidKindError(SynthUserError):
    """Wrong action kind for the component, or a missing/forbidden payload."""


class DivergenceError(SynthUserError):
    """A replayed action is not available in the current state."""


class DeadEndError(SynthUserError):
    """No actions are available to select from."""


class ModelError(SynthUserError):
    """A behavior model cannot be built or loaded."""


class ConfigError(SynthUserError):
    """A configuration file or flag set is invalid."""


class RunError(SynthUserError):
    """A simulation run could not be started or aborted abnormally."""
