"""Exception types shared across the library."""


class HidimError(Exception):
    """Base class for all hidim-specific errors."""


class NotPositiveSemidefinite(HidimError):
    """Matrix admits no Cholesky factorization even at maximum jitter."""


class TooLarge(HidimError):
    """Requested enumeration exceeds the configured size guard."""


class IndexOutOfRange(HidimError, IndexError):
    """Variable index outside the matrix dimension."""


class DomainError(HidimError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateColumn(HidimError):
    """A column has zero variance, so its correlations are undefined."""

    def __init__(self, columns):
        self.columns = tuple(int(c) for c in columns)
        cols = ", ".join(str(c) for c in self.columns)
        super().__init__(f"zero-variance column(s): {cols}")


class DimensionMismatch(HidimError):
    """Data and correlation matrix dimensions disagree."""


class Unachievable(HidimError):
    """No admissible parameter attains the requested signal size."""


class ConfigError(HidimError, ValueError):
    """Simulation configuration violates an invariant."""
