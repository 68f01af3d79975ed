"""Exception types shared across the library."""


class DomainError(ValueError):
    """Raised when a kinematic or model input lies outside its admissible domain."""


class ConfigurationError(ValueError):
    """Raised when a loss or penalty configuration is unusable (e.g. a zero divisor)."""


class TermOverflowError(FloatingPointError):
    """Raised when an exponential term would overflow.

    The offending term is recorded so callers can report which building block
    blew up instead of propagating infs.
    """

    def __init__(self, term, argument):
        self.term = term
        self.argument = float(argument)
        super().__init__(
            f"exp argument {self.argument:.3g} exceeds 700 in term {term}"
        )


class DataFormatError(ValueError):
    """Raised for malformed dataset files; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    """Raised when an optimization run produces a non-finite loss.

    Carries the last finite state so a caller can inspect or resume it.
    """

    def __init__(self, message, last_params=None, last_loss=None, epoch=None):
        self.last_params = last_params
        self.last_loss = last_loss
        self.epoch = epoch
        super().__init__(message)
