"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems with 3, numerical and training failures with 4.
"""


class OptlabError(Exception):
    """Base class for every error raised by optlab."""


class InvalidArgumentError(OptlabError, ValueError):
    """An argument is outside the domain accepted by an operation."""


class ConfigError(OptlabError):
    """An experiment configuration is malformed or inconsistent."""


class DataError(OptlabError):
    """Input data is missing, empty or unusable."""


class ParseError(DataError):
    """A file row could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class SchemaError(DataError, ValueError):
    """Columns differ from what an operation or a fitted model expects."""

    def __init__(self, message, missing=(), extra=()):
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        details = []
        if self.missing:
            details.append("missing columns: " + ", ".join(self.missing))
        if self.extra:
            details.append("unexpected columns: " + ", ".join(self.extra))
        if details:
            message = f"{message} ({'; '.join(details)})"
        super().__init__(message)


class NumericalError(OptlabError, ArithmeticError):
    """A numerical procedure failed; ``diagnostics`` carries the details."""

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            extra = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} [{extra}]"
        super().__init__(message)


class TrainingError(NumericalError):
    """Model fitting diverged or otherwise failed."""


class TuningError(TrainingError):
    """Every trial of a hyperparameter search failed."""

    def __init__(self, message, causes=()):
        self.causes = list(causes)
        if self.causes:
            message += "; " + "; ".join(f"trial {i}: {c}" for i, c in self.causes)
        OptlabError.__init__(self, message)
        self.diagnostics = {}


class UndefinedMetricError(OptlabError, ValueError):
    """A metric has no defined value for the given input (e.g. R^2 on a constant target)."""
