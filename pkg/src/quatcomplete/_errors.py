"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data is unusable (bad shapes, non-finite values, unreadable files)."""


class ConfigError(ValueError):
    """Raised when a parameter value is outside its allowed range."""
