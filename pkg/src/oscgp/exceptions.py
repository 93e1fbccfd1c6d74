"""Exception types raised by oscgp."""

import numpy as np


class ParameterError(ValueError):
    """A model or process parameter lies outside its admissible range."""


class UnclassifiableKernelError(ValueError):
    """A user kernel was given without a declared decay regime."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Covariance matrix failed to factorize.

    Attributes
    ----------
    minor : int
        1-based order of the first leading minor that is not positive.
    """

    def __init__(self, minor, message=None):
        self.minor = minor
        super().__init__(message or f"leading minor of order {minor} is not positive definite")


class SeriesConvergenceError(RuntimeError):
    """A series or quadrature did not reach the requested accuracy."""


class ReplicationError(RuntimeError):
    """A Monte Carlo replication failed; carries the replication coordinates."""

    def __init__(self, horizon, index, cause):
        self.horizon = horizon
        self.index = index
        super().__init__(f"replication {index} at horizon T={horizon} failed: {cause!r}")
