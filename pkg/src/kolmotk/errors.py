"""Exception types shared across the toolkit."""


class KolmotkError(Exception):
    """Base class for all toolkit errors."""


class NotHypoelliptic(KolmotkError):
    """The Kalman rank condition fails: the controllability matrix never
    reaches full rank, so the operator has no smoothing semigroup."""


class SingularGramian(KolmotkError):
    """The covariance Q_t is numerically singular below the clamping floor."""


class OutOfDomain(KolmotkError):
    """A field evaluation point left the declared box."""


class DegenerateBox(KolmotkError):
    """The evaluation box is too small to fit a third-difference stencil
    at the minimum probing scale."""


class NonPositiveValue(KolmotkError):
    """Log-log exponent fitting requires strictly positive values."""


class ConfigError(KolmotkError):
    """A run configuration failed schema validation."""
