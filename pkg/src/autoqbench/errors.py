"""Exception types shared across the suite."""


class AutoQBenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AutoQBenchError):
    """Input data violates a documented invariant (bad vector length, bad index, ...)."""


class ConfigurationError(AutoQBenchError):
    """A configuration object is inconsistent (non-positive penalty, empty box, ...)."""


class CapExceededError(AutoQBenchError):
    """A problem is larger than an exact/simulated backend is willing to handle.

    Raised instead of silently truncating; the message states the cap and the
    requested size.
    """
