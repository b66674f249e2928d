"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value (unsupported order, bad dimensions, ...)."""


class NumericInputError(ValueError):
    """Non-finite or otherwise unusable numeric input."""


class MappingError(ValueError):
    """Symbol not on the constellation lattice."""


class FileFormatError(ValueError):
    """Malformed channel file."""


class DegenerateChannelError(ValueError):
    """Channel matrix unusable (all-zero, singular where inversion needed)."""


class CapacityError(RuntimeError):
    """Exhaustive enumeration would exceed the configured cap."""


class LocalityError(RuntimeError):
    """A unit attempted to read another unit's local data."""


class UsageError(ValueError):
    """Bad command-line or config-file usage."""
