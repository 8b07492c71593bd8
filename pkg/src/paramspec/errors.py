"""Exception types shared across the toolkit.

Exit-code mapping for the CLI: ConfigError -> 2, numerical failures
(QuadratureError, IntegratorError, FitDegenerateError, InsufficientDataError)
-> 3, ResolutionFailureError / CalibrationError -> 4.
"""


class ParamspecError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ParamspecError):
    """Malformed, incomplete, or out-of-range configuration input."""


class QuadratureError(ParamspecError):
    """Adaptive quadrature failed to converge; message carries diagnostics."""


class FitDegenerateError(ParamspecError):
    """Decay fit attempted on data that shows no usable decay."""


class InsufficientDataError(ParamspecError):
    """Series too short for the requested extraction (e.g. < 5 peaks)."""


class IntegratorError(ParamspecError):
    """State propagation violated a conservation tolerance (norm, positivity)."""


class ResolutionFailureError(ParamspecError):
    """Peak resolution did not reach the required number of successful fits.

    Carries whatever partial results were obtained in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CalibrationError(ParamspecError):
    """Pulse calibration could not reach the required infidelity floor."""
