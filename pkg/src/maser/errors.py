"""Exception types shared across the toolkit."""


class MaserError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MaserError):
    """Bad or inconsistent configuration (schema, code lists, spec files)."""


class ValidationError(MaserError):
    """Input data violates a documented precondition or invariant."""


class InsufficientDataError(ValidationError):
    """An operation needs more rows than the input provides."""
