"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, verification failures with 3 and unsupported channel regimes
with 4 (see :mod:`dispersive_sinr.cli`).
"""


class DispersiveSinrError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimensionError(DispersiveSinrError, ValueError):
    """An array argument has an unusable shape or size."""


class UnsupportedRegimeError(DispersiveSinrError, ValueError):
    """Channel delay spread outside the one-symbol-ISI regime (D > N - L)."""


class NotACovarianceError(DispersiveSinrError, ValueError):
    """A matrix that must be positive semidefinite is not, beyond tolerance."""


class ConfigurationError(DispersiveSinrError, ValueError):
    """A scenario or system configuration is inconsistent."""


class VerificationError(DispersiveSinrError, RuntimeError):
    """Analytic and simulated results disagree beyond the allowed tolerance."""
