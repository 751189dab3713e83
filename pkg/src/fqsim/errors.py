class FqsimError(Exception):
    """Base class for simulator errors."""


class ConfigurationError(FqsimError, ValueError):
    pass


class InitializationError(FqsimError):
    def __init__(self, message, mismatch=None):
        super().__init__(message)
        self.mismatch = mismatch


class StepFailure(FqsimError):
    """Newton did not converge within a time step."""

    def __init__(self, message, time=None, residual=None):
        super().__init__(message)
        self.time = time
        self.residual = residual


class NumericalDivergence(StepFailure):
    pass


class EventError(FqsimError):
    pass


class ModelValidityError(FqsimError):
    pass


class MetricError(FqsimError, ValueError):
    pass
