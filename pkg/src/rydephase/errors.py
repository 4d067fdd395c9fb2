"""Exception hierarchy shared by all rydephase modules."""


class RydephaseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(RydephaseError, ValueError):
    pass


class ResourceLimitError(RydephaseError):
    """A computation would exceed a configured size limit."""

    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class NumericalFailure(RydephaseError):
    pass


class DegenerateSteadyState(NumericalFailure):
    pass


class SingularityError(NumericalFailure):
    pass


class DegenerateFit(RydephaseError):
    pass


class InfiniteDephasing(RydephaseError):
    pass


class FitFailure(NumericalFailure):
    """Nonlinear fit did not converge; ``partial`` holds whatever was obtained."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(RydephaseError):
    """Invalid scenario configuration; ``fields`` maps key -> message."""

    def __init__(self, message, fields=None):
        super().__init__(message)
        self.fields = dict(fields or {})
