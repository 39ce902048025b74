"""Exception hierarchy shared by the library, the CLI and the HTTP service."""


class PovmixError(Exception):
    """Base class for every error raised by povmix."""


class InvalidParameterError(PovmixError, ValueError):
    pass


class DegenerateSampleError(PovmixError, ValueError):
    pass


class TooFewExcessesError(PovmixError):
    def __init__(self, count: int, minimum: int):
        self.count = count
        self.minimum = minimum
        super().__init__(f"only {count} excesses above the threshold (need at least {minimum})")


class FitError(PovmixError):
    pass


class BootstrapError(PovmixError):
    pass


class PoissonOverflowError(PovmixError, OverflowError):
    pass


class CountsFileError(PovmixError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConfigError(PovmixError, ValueError):
    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


class OutputExistsError(PovmixError, FileExistsError):
    pass


# Errors caused by the caller's input (exit code 2 / HTTP 4xx)
INPUT_ERRORS = (CountsFileError, ConfigError, InvalidParameterError, DegenerateSampleError, OutputExistsError)

# Errors raised by the numerical machinery (exit code 3 / HTTP 500)
NUMERICAL_ERRORS = (FitError, BootstrapError, PoissonOverflowError)
