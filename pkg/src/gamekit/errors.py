"""Exception types shared across the package."""


class GameKitError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GameKitError, ValueError):
    """Argument shapes, indices, or ranges are inconsistent."""


class SizeError(GameKitError, ValueError):
    """A dense representation or enumeration would exceed the size cap."""


class DegenerateLikelihoodError(GameKitError, ValueError):
    """An observed signal has zero probability under both user types."""


class InfeasibleResolutionError(GameKitError, ValueError):
    """No grid point supports any follower best response."""


class ConvergenceError(GameKitError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    The partial result is attached as ``result`` so callers can still
    inspect the bounds that were achieved.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(GameKitError, ValueError):
    """A scenario file could not be parsed or failed validation."""

    def __init__(self, message, path=None, line=None):
        where = []
        if path:
            where.append(f"field '{path}'")
        if line is not None:
            where.append(f"line {line}")
        full = f"{message} ({', '.join(where)})" if where else message
        super().__init__(full)
        self.path = path
        self.line = line
