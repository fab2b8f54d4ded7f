"""Exception hierarchy shared by the samplers and the CLI."""


class GibbsLinesError(Exception):
    """Base class for all package errors."""


class DomainError(GibbsLinesError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfeasibleError(DomainError):
    """The requested path space or avoidance set is empty."""


class NumericError(GibbsLinesError, ArithmeticError):
    """An iterative solver failed to converge."""


class TooLargeError(GibbsLinesError):
    """An exact enumeration would exceed its configured cap."""


class AcceptanceTooSmallError(GibbsLinesError):
    """Rejection sampling ran out of tries.

    ``z_hat`` holds the running acceptance estimate (hits / tries).
    """

    def __init__(self, message, z_hat, hits, tries):
        super().__init__(message)
        self.z_hat = z_hat
        self.hits = hits
        self.tries = tries


class ConfigError(GibbsLinesError):
    """A run configuration is malformed or incomplete."""
