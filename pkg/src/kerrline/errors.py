"""Exception types raised across the package."""


class KerrlineError(Exception):
    """Base class for all package-specific errors."""


class InvalidRates(KerrlineError):
    """Requested decoherence rates are unrealizable in the chosen dephasing mode."""


class NonPositive(KerrlineError):
    """An argument that must be strictly positive was zero or negative."""


class ZeroProbe(KerrlineError):
    """Transmission is undefined for a vanishing probe amplitude."""


class SingularSystem(KerrlineError):
    """The steady-state linear solve failed or left a residual above tolerance."""


class StepFailure(KerrlineError):
    """Adaptive time stepping could not meet the error tolerance."""


class NoDoublet(KerrlineError):
    """Fewer than two transmission minima: control too weak to resolve a doublet."""


class DegenerateJacobian(KerrlineError):
    """The fit Jacobian is rank deficient: parameters are not identifiable."""


class NonConvergence(KerrlineError):
    """Optimizer iteration limit.

    fit() itself reports this condition through FitReport.status
    ('non_convergence') with the best parameters found; the exception type
    exists for callers that want to escalate that status.
    """


class ConfigError(KerrlineError):
    """A configuration file or CLI flag failed validation."""
