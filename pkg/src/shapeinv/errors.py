"""Exception types shared across the package."""


class ShapeInvError(Exception):
    """Base class for all package errors."""


class DomainError(ShapeInvError, ValueError):
    """Parameters or configuration outside the admissible set."""


class SingularConfigurationError(ShapeInvError, ValueError):
    """A configuration hit (or came within eps_sing of) a singular hyperplane."""


class JetOrderError(ShapeInvError, RuntimeError):
    """A derivative order was requested that the jet no longer carries."""


class DimensionCapError(ShapeInvError, ValueError):
    """A discretized operator would exceed the configured size caps."""


class ConvergenceError(ShapeInvError, RuntimeError):
    """An eigensolver failed its residual contract; carries best residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
