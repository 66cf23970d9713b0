"""Exception types shared across the package, with CLI exit codes."""


class ModcavError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ShapeError(ModcavError):
    """Tensor/layer shape mismatch. Carries expected vs actual shapes."""

    exit_code = 1

    def __init__(self, context, expected, actual):
        self.context = context
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{context}: expected shape {self.expected}, got {self.actual}")


class NonFiniteError(ModcavError):
    """A forward pass, gradient, or loss produced NaN/Inf."""

    exit_code = 6


class DivergenceError(ModcavError):
    """Training loss became non-finite; carries diagnostics."""

    exit_code = 6

    def __init__(self, message, step=None, last_loss=None):
        self.step = step
        self.last_loss = last_loss
        super().__init__(message)


class ConfigError(ModcavError):
    """Run configuration failed schema validation."""

    exit_code = 3


class ArtifactError(ModcavError):
    """Missing or hash-mismatched upstream artifact."""

    exit_code = 4


class ThresholdError(ModcavError):
    """Evaluation thresholds from the config were violated."""

    exit_code = 5
