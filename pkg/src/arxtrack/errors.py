"""Exception types shared across the package."""


class ArxTrackError(Exception):
    """Base class for all package errors."""


class ConfigError(ArxTrackError):
    """Malformed model or experiment configuration (dimension mismatch,
    non-SPD covariance, unparsable config file, ...)."""


class NonCausalError(ArxTrackError):
    """The input polynomial has a zero on or inside the unit circle, so its
    inverse power series does not converge."""

    def __init__(self, spectral_radius, message=None):
        self.spectral_radius = spectral_radius
        super().__init__(
            message
            or f"non-causal input polynomial: companion spectral radius "
            f"{spectral_radius:.6g} >= 1"
        )


class NumericalAbortError(ArxTrackError):
    """A simulation blew up (state norm above the abort threshold).

    Carries the step index at which the abort happened and, when available,
    the partial trace recorded up to that step.
    """

    def __init__(self, step, message=None, partial_trace=None):
        self.step = step
        self.partial_trace = partial_trace
        super().__init__(message or f"simulation aborted at step {step}: state norm blew up")


class EstimatorError(ArxTrackError):
    """Poisoned estimator state (non-finite inputs or updates)."""
