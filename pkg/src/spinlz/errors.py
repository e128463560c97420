"""Exception hierarchy shared by all spinlz modules."""


class SpinLZError(Exception):
    """Base class for every error raised by spinlz."""


class DomainError(SpinLZError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class CapabilityError(SpinLZError):
    """The request is valid but beyond what the implementation supports."""


class ParametrizationSingularityError(SpinLZError):
    """The (f, h, g) chart is singular at the requested propagator (U11 ~ 0)."""


class PropagationError(SpinLZError):
    """Numerical time integration failed."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t = {time:.6g})")
        self.time = time


class StiffnessError(PropagationError):
    """The adaptive integrator could not make progress (step-size underflow)."""
