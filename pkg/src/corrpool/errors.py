"""Exception types shared across the package."""


class CorrPoolError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(CorrPoolError):
    """Inconsistent configuration: shape mismatches, invalid hyperparameters."""


class InputError(CorrPoolError):
    """Invalid runtime input: empty sequences, bad labels, non-simplex weights."""


class FormatError(CorrPoolError):
    """Malformed feature file or manifest."""


class TrainingError(CorrPoolError):
    """Training diverged or produced non-finite values."""


class MetricError(CorrPoolError):
    """A metric is undefined for the given inputs."""
