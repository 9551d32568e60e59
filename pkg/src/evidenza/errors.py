"""Exception types raised across the package."""


class EvidenzaError(Exception):
    """Base class for all package errors."""


class DomainError(EvidenzaError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class DegenerateIntervalError(EvidenzaError, ArithmeticError):
    """A truncated sampler's acceptance probability underflowed to zero.

    The constraint is too tight to be represented in double precision with
    the chosen parametrization.
    """


class EmptyConstraintError(EvidenzaError, ValueError):
    """The likelihood constraint ``L(x) > y`` has empty support."""


class QuadratureError(EvidenzaError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class MissingGridError(EvidenzaError, LookupError):
    """An estimate does not carry the grid needed for a post-hoc computation."""


class ConfigError(EvidenzaError, ValueError):
    """An experiment configuration is invalid."""
