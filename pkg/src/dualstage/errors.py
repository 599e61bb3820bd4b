"""Exception hierarchy shared by the engine and the CLI.

The CLI maps these onto process exit codes: configuration, usage and
input errors exit 1, I/O errors exit 2, internal invariant violations
exit 3.
"""


class DualStageError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DualStageError):
    """Invalid or inconsistent configuration values."""


class UsageError(DualStageError):
    """An operation was called with arguments that violate its contract."""


class InputError(DualStageError):
    """Input data cannot be processed (silent speech, empty ranges, ...)."""


class AudioIOError(DualStageError):
    """A file could not be read or written, or has an unsupported format."""


class InternalError(DualStageError):
    """An internal invariant was violated; indicates a bug, not bad input."""
