class KnockoffError(Exception):
    """Base class for errors raised by phknockoff."""


class NotPositiveDefiniteError(KnockoffError, ValueError):
    """A covariance matrix (or knockoff conditional covariance) is not PD/PSD."""


class FitError(KnockoffError, ValueError):
    """The L1 fit could not be carried out on the given data."""


class CapabilityError(KnockoffError):
    """A brute-force routine was asked to run beyond its size limit."""
