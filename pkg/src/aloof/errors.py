"""Exception hierarchy shared by the library and the CLI."""


class AloofError(Exception):
    """Base class for all library errors."""


class DomainError(AloofError, ValueError):
    """Argument outside the mathematical or physical domain."""


class ConfigError(AloofError):
    """Invalid or incomplete configuration.

    ``lineno`` is set when the problem can be traced to a line of a
    configuration file.
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ConvergenceError(AloofError):
    """Iterative method stopped before meeting its tolerance.

    The best available estimate is kept on the exception so callers can
    decide whether to use it.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class EvaluationError(AloofError):
    """An integrand or model returned a non-finite value."""


class ExtractionError(AloofError):
    """Wien-filter scan does not constrain the path separation."""


class FormatError(AloofError):
    """Malformed image, sidecar or CSV file."""
