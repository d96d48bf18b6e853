"""Exception types raised across the package."""


class GridMismatchError(ValueError):
    """Two sampled objects do not share a slice width or length."""


class DimensionError(ValueError):
    """Operation needs a different spatial dimension."""


class UnsupportedModelError(ValueError):
    """Model combination not handled by the requested routine."""


class CostGuardError(ValueError):
    """Request refused because it would be too expensive."""


class StepSizeError(RuntimeError):
    """Integrator step too large for the generator."""


class NumericalFailure(RuntimeError):
    """Non-finite amplitudes appeared during time stepping."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step
