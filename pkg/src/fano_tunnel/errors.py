"""Exception types shared by all modules."""


class FanoTunnelError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FanoTunnelError):
    """An argument lies outside the domain where the operation is defined."""


class QuadratureFailure(FanoTunnelError):
    """A numerical integral did not converge to the requested tolerance."""


class RootNotBracketed(FanoTunnelError):
    """A root finder could not bracket a sign change."""


class NoRoot(FanoTunnelError):
    """A dispersion equation has no root in the searched region."""


class MethodUnavailable(FanoTunnelError):
    """The requested evolution method is not applicable to these parameters."""


class GridTooCoarse(FanoTunnelError):
    """A finite-difference stencil is under-resolved on the given time grid."""


class PositivityViolation(FanoTunnelError):
    """A density matrix fails positivity beyond numerical slack."""


class IntegratorFailure(FanoTunnelError):
    """The ODE integrator failed (step-size underflow or non-convergence)."""


class EigenFailure(FanoTunnelError):
    """A matrix eigendecomposition failed."""


class ScenarioError(FanoTunnelError):
    """A scenario file is missing, malformed, or inconsistent."""
