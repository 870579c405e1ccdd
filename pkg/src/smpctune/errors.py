"""Exception hierarchy shared across the package."""


class SMPCTuneError(Exception):
    """Base class for all handled errors."""


class ConfigError(SMPCTuneError, ValueError):
    """A parameter or configuration value is out of range or malformed."""


class UsageError(SMPCTuneError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class ProtocolError(SMPCTuneError, RuntimeError):
    """A consistency check inside the secure computation failed."""
