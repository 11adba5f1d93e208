"""Exception hierarchy shared by the solvers, the simulator and the CLI."""


class RuinkitError(Exception):
    """Base class for all library errors."""


class ParameterError(RuinkitError, ValueError):
    """Market parameters or a problem specification violate a required inequality."""


class DomainError(RuinkitError, ValueError):
    """A function was evaluated outside the region where it is defined."""


class NumericalError(RuinkitError, ArithmeticError):
    """A numerical routine (quadrature, ODE integration) failed to meet its tolerance.

    ``achieved`` carries whatever accuracy or diagnostic the routine reached.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SolverError(RuinkitError, RuntimeError):
    """A free-boundary or root-finding solve did not converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(RuinkitError, ValueError):
    """Invalid simulation or CLI configuration."""
