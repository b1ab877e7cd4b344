"""Exception hierarchy; the CLI maps each family to an exit code."""


class StageSpreadError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(StageSpreadError, ValueError):
    """Malformed or incomplete parameter document."""


class InvalidParamsError(StageSpreadError, ValueError):
    """Parameters violate a standing assumption of the model."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DiagnosticError(StageSpreadError, RuntimeError):
    """A numerical procedure could not deliver a trustworthy answer."""


class SpeedUndefinedError(InvalidParamsError):
    """No spreading speed: the extinction state is stable (L <= 1)."""
