"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to reach its tolerance."""


class UnsupportedError(NotImplementedError):
    """The requested operation is not available for this domain or family."""


class DegenerateError(ArithmeticError):
    """The quantity is undefined for a degenerate configuration."""


class PoleError(DomainError):
    """Evaluation too close to a pole of a meromorphic function."""


class DivergentError(ArithmeticError):
    """An integral required by the operation diverges."""


class CalibrationError(ArithmeticError):
    """Residue series and Monte-Carlo reference disagree beyond tolerance."""


class AssumptionError(DomainError):
    """A connection function fails the regularity checks a formula needs."""
