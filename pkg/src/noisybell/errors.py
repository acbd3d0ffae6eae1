"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularInversionError(DomainError):
    """A noise kernel with gamma = 0 cannot be inverted."""


class DegenerateDistributionError(DomainError):
    """A Gaussian approximation was requested for a zero-variance law."""
