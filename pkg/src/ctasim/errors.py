"""Shared exception types."""


class ConfigurationError(ValueError):
    """Raised when a spec, scenario, or override names an unknown or invalid
    field.  The message always identifies the offending field."""
