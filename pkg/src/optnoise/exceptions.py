"""Exception hierarchy shared by every optnoise module."""


class OptnoiseError(Exception):
    """Base class for all library errors."""


class DomainError(OptnoiseError, ValueError):
    """An input lies outside the domain of the operation."""


class DegenerateInputError(DomainError):
    """Inputs are valid but degenerate (zero time or zero volatility)."""


class CriticalPriceError(OptnoiseError, ArithmeticError):
    """The early-exercise boundary solver failed to converge.

    Attributes
    ----------
    last_iterate : float
        The final candidate boundary.
    residual : float
        Value-matching residual at ``last_iterate``.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, last_iterate, residual, iterations):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class SchemaError(OptnoiseError, ValueError):
    """Input file lacks a required column."""


class FormatError(OptnoiseError, ValueError):
    """Input file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CollinearityError(OptnoiseError, ArithmeticError):
    """Design matrix is rank deficient."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class PipelineError(OptnoiseError):
    """A pipeline stage aborted."""

    def __init__(self, stage, message, counts=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.counts = dict(counts or {})


class ContractPricingError(OptnoiseError):
    """Pricing failed for one contract; ``key`` identifies it."""

    def __init__(self, key, cause):
        super().__init__(f"pricing failed for {key}: {cause}")
        self.key = key
