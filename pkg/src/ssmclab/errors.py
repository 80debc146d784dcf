"""Exception types shared across the package."""


class SimError(Exception):
    """Base class for all simulation-lab errors."""


class InvalidInput(SimError):
    """A numeric argument is non-finite or violates a precondition."""


class ConfigError(SimError):
    """A configuration value or file is invalid.

    Carries the offending line number when the error originates from a
    config file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchedulingError(SimError):
    """A controller tick was requested off the decision grid."""


class InvalidWindow(SimError):
    """A metric window does not span an integer number of periods."""


class NotReached(SimError):
    """The sliding variable never re-entered the band after an event.

    ``max_remaining`` holds the largest |s| observed after the event.
    """

    def __init__(self, message, max_remaining):
        self.max_remaining = max_remaining
        super().__init__(message)


class AbortedRun(SimError):
    """A run hit a non-finite state.  ``trace`` holds the partial trace."""

    def __init__(self, message, trace):
        self.trace = trace
        super().__init__(message)
