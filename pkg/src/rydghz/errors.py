"""Exception types shared across the package."""


class RydghzError(Exception):
    """Base class for all package errors."""


class ValidationError(RydghzError, ValueError):
    """Bad argument, domain violation, or malformed input."""


class CapacityError(RydghzError):
    """Requested basis would exceed the configured memory cap."""


class PropagationError(RydghzError):
    """Krylov step failed to converge at the requested tolerance."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class SpectralError(RydghzError):
    """Eigensolver failed to converge."""


class OptimizationError(RydghzError):
    """Figure-of-merit evaluation failed inside an optimization loop."""

    def __init__(self, message, super_iteration=None, evaluation_index=None):
        super().__init__(message)
        self.super_iteration = super_iteration
        self.evaluation_index = evaluation_index


class ScheduleSingularityError(RydghzError):
    """Local-adiabatic schedule hit a vanishing gap."""

    def __init__(self, message, s_star=None):
        super().__init__(message)
        self.s_star = s_star


class FitError(RydghzError):
    """Degenerate or ill-posed curve fit.

    curve, when present, carries the (x, y, ...) arrays the fit was
    attempted on so callers can inspect or persist the data.
    """

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class InferenceError(RydghzError):
    """Constrained inference failed to reach the KKT tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
