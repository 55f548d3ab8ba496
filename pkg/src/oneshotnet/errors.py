"""Exception types shared across the package."""


class ProbabilityError(ValueError):
    """Base class for invalid probabilistic input or state."""


class AllZeroError(ProbabilityError):
    pass


class NegativeWeightError(ProbabilityError):
    pass


class BadAxisError(ProbabilityError):
    pass


class ShapeMismatchError(ProbabilityError):
    pass


class ZeroConditioningError(ProbabilityError):
    """Conditioning event has zero probability.

    The caller owns the zero-mass policy; nothing in this package invents a
    conditional distribution on a null event.
    """


class ZeroProbabilityPointError(ProbabilityError):
    pass


class CapacityExceededError(ProbabilityError):
    """A dense table or atom list would exceed the configured atom cap."""


class OutOfUniverseError(ProbabilityError):
    pass


class KindMismatchError(ValueError):
    pass


class ConfigError(ValueError):
    """Base class for configuration problems (exit code 1 in the CLI)."""


class ParseError(ConfigError):
    pass


class SchemaError(ConfigError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
