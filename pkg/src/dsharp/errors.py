"""Exception types raised across the package."""


class DSharpError(Exception):
    """Base class for all package errors."""


class ParameterError(DSharpError, ValueError):
    """Distribution or procedure parameters outside their valid domain."""


class DomainError(DSharpError, ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(DSharpError, ValueError):
    """Malformed user data (non-finite values, bad files, bad grammar)."""


class DegenerateModelError(DSharpError, ArithmeticError):
    """A sharpened density has (numerically) zero mass."""


class SingularDesignError(DSharpError, ArithmeticError):
    """Least-squares design is rank deficient; use the lasso solver instead."""


class ConvergenceError(DSharpError, RuntimeError):
    """An iterative solver hit its iteration limit."""


class SupportError(DSharpError, ValueError):
    """Observed data fall outside the support of a model."""
