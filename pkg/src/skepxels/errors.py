"""Exception types shared across the package."""


class SkepxelsError(Exception):
    """Base class for all package errors."""


class ParseError(SkepxelsError):
    """Raised when an input file cannot be parsed.

    Carries an optional line number for text formats.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(SkepxelsError):
    """Raised when data violates a structural invariant."""


class SamplingError(SkepxelsError):
    """Raised when rejection sampling exhausts its attempt budget.

    ``best_gamma`` is the largest scatter value seen, so callers can
    lower the threshold and retry.
    """

    def __init__(self, message, best_gamma):
        super().__init__(message)
        self.best_gamma = best_gamma
