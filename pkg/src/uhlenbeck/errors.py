"""Exception hierarchy shared by all modules."""


class UhlenbeckError(Exception):
    """Base class for errors raised by this package."""


class DomainError(UhlenbeckError, ValueError):
    pass


class NonPositiveCoefficient(UhlenbeckError, ValueError):
    pass


class IndexViolation(UhlenbeckError, ValueError):
    pass


class SingularAtZero(UhlenbeckError, ZeroDivisionError):
    pass


class DivergentIntegral(UhlenbeckError, ArithmeticError):
    pass


class SingularPoint(UhlenbeckError, ValueError):
    pass


class CriticalPoint(UhlenbeckError, ValueError):
    """Raised when a quantity normalised by |grad u| is requested where grad u vanishes."""


class NonsmoothCoefficient(UhlenbeckError, ValueError):
    pass


class ConstraintViolation(UhlenbeckError, ValueError):
    pass


class SingularOmega(UhlenbeckError, ValueError):
    pass


class GeometryError(UhlenbeckError, ValueError):
    pass


class NewtonStall(UhlenbeckError, RuntimeError):
    pass


class ContinuationAbort(UhlenbeckError, RuntimeError):
    pass


class ConfigError(UhlenbeckError, ValueError):
    pass
