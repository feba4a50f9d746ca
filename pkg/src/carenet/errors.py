class CarenetError(Exception):
    """Base class for package errors."""


class ValidationError(CarenetError, ValueError):
    """Input violates a schema, range or cross-reference rule (CLI exit 2)."""
