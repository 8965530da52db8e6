"""Exception hierarchy shared by all modules."""


class ACIQError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ACIQError, ValueError):
    """An argument lies outside the domain of an operation (e.g. q = 0)."""


class ConvergenceError(ACIQError):
    """A quadrature or iterative solve could not meet its tolerance.

    ``estimate`` carries the best value found so far (or ``None`` when the
    integral was refused up front), ``abs_err`` its error estimate.
    """

    def __init__(self, message, estimate=None, abs_err=None):
        super().__init__(message)
        self.estimate = estimate
        self.abs_err = abs_err


class ExtrapolationError(ACIQError):
    """A sampled field was evaluated outside its support without zero padding."""


class MissingMomentError(ACIQError, KeyError):
    """A moment table lacks an entry needed by a quantization formula."""

    def __init__(self, key):
        super().__init__(f"moment table has no entry for (beta, nu1, nu2) = {key}")
        self.key = key

    def __str__(self):
        return self.args[0]


class GaugeConditionError(ACIQError):
    """The gauge condition d1 ln Omega(1) = -2 is violated beyond tolerance."""

    def __init__(self, residual, tol):
        super().__init__(
            f"gauge condition |d1 ln Omega(1) + 2| = {residual:.3e} exceeds tol {tol:.1e}"
        )
        self.residual = residual
        self.tol = tol


class ConfigError(ACIQError):
    """Invalid run configuration (schema violation, unknown key, bad value)."""
