"""Exception hierarchy.

Every error carries enough context to print a one-line machine-readable
diagnostic (see :meth:`PNPError.record`).
"""


class PNPError(Exception):
    """Base class for all solver errors."""

    kind = "error"

    def record(self):
        return f"{self.kind}: {self}"


class GridMismatchError(PNPError, ValueError):
    kind = "GridMismatch"


class WrongDimensionError(PNPError, ValueError):
    kind = "WrongDimension"


class NonZeroMeanError(PNPError, ValueError):
    kind = "NonZeroMean"

    def __init__(self, mean, scale):
        self.mean = mean
        self.scale = scale
        super().__init__(f"mean {mean:.3e} exceeds tolerance relative to norm {scale:.3e}")


class NonPositiveCoefficientError(PNPError, ValueError):
    kind = "NonPositiveCoefficient"


class NonPositiveConcentrationError(PNPError, ValueError):
    kind = "NonPositiveConcentration"


class NoConvergenceError(PNPError, RuntimeError):
    kind = "NoConvergence"

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations, residual {residual:.3e}")


class PicardNoConvergenceError(NoConvergenceError):
    kind = "PicardNoConvergence"


class PositivityLossError(PNPError, RuntimeError):
    kind = "PositivityLoss"

    def __init__(self, cell, value, species="n"):
        self.cell = tuple(int(i) for i in cell)
        self.value = value
        self.species = species
        super().__init__(f"{species}{list(self.cell)} = {value:.6e} left the positive cone")


class ConfigParseError(PNPError, ValueError):
    kind = "ParseError"

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigValidationError(PNPError, ValueError):
    kind = "ValidationError"

    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class InvariantViolationError(PNPError, RuntimeError):
    kind = "InvariantViolation"
