"""
Exception hierarchy shared by every trancherisk app.

Services raise these; management commands and API views translate them
into exit codes and HTTP responses.
"""


class TrancheRiskError(Exception):
    """Base class for all library errors."""


class DomainError(TrancheRiskError, ValueError):
    """A numeric input lies outside the domain of the operation."""


class NoBracketError(TrancheRiskError):
    """The root finder was given an interval that does not bracket a root."""


class InfeasibleCalibrationError(TrancheRiskError):
    """The expected-recovery matching condition has no solution."""


class PortfolioError(TrancheRiskError):
    """A portfolio or tranche is in an invalid state."""


class UnknownNameError(PortfolioError, KeyError):
    """The name is not live in the portfolio."""

    def __str__(self):
        return str(self.args[0]) if self.args else 'unknown name'


class PortfolioFormatError(TrancheRiskError):
    """A portfolio file could not be parsed."""


class ConfigurationError(TrancheRiskError):
    """A run configuration or model specification is invalid."""


class InvariantViolation(TrancheRiskError):
    """A verification check failed."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])
