class InequalityVarError(Exception):
    """Base exception for every failure raised by this package."""


class ValidationError(InequalityVarError):
    """Base exception for invalid inputs (bad files, bad parameters)."""


class NumericalError(InequalityVarError):
    """Base exception for numerical failures during estimation or analysis."""


class DataIOError(InequalityVarError):
    """Base exception for file-system and network failures."""


class DomainError(ValidationError, ValueError):
    """Argument outside the domain of a numerical function."""


class ConfigError(ValidationError):
    """Invalid or incomplete run configuration."""
