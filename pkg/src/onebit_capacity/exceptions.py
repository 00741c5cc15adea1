class DomainError(ValueError):
    """Argument outside the domain of a function (e.g. |q| > 1 for arccos)."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class UnsupportedError(ValueError):
    """Valid arguments, but the requested method does not cover them."""


class RegimeWarning(UserWarning):
    """An asymptotic formula is being used outside the regime it describes."""
