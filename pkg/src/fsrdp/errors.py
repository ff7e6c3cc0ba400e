"""Exception and warning types."""


class DomainError(ValueError):
    """Arguments outside the domain where a bound is defined."""


class SaturationWarning(RuntimeWarning):
    """A quantity overflowed double precision and was reported as +inf."""
