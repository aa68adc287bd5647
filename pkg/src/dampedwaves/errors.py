"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid sizes, parameters, or option combinations."""


class NumericsError(ArithmeticError):
    """Non-finite values or other numerical breakdown."""


class SingularityError(NumericsError):
    """A pointwise denominator vanished (or nearly so) on the sampling grid."""


class DiffeomorphismError(RuntimeError):
    """The flattening map degenerated: min(1 + dpsi_dz) fell below the margin."""


class ContractionError(RuntimeError):
    """Picard iteration left (or never entered) the contraction regime."""
