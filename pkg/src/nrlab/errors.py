"""Exception hierarchy. Every numeric failure is a ``NumericalError`` so the CLI can map it to exit code 1."""


class NumericalError(RuntimeError):
    pass


class ConvergenceError(NumericalError):
    pass


class CertificationError(NumericalError):
    pass


class PrecisionExhausted(NumericalError):
    pass


class RangeExceeded(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class ContinuationError(NumericalError):
    pass


class DomainError(ValueError):
    """Input outside the operation's domain (pole, branch cut, wrong sector)."""


class ConfigError(ValueError):
    pass
