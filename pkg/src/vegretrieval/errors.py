"""Exception types shared across the retrieval chain."""


class ConfigurationError(ValueError):
    """Invalid configuration, parameters or mismatched inputs."""


class NumericalError(ArithmeticError):
    """A linear-algebra step failed (e.g. Cholesky of a non-PD matrix)."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class FormatError(ValueError):
    """Malformed product container."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
