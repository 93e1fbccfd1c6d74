"""scikit-learn compatible wrappers around the functional API.

Inputs follow the estimator convention: ``fit(X)`` with ``X`` of shape
``(n, 2)`` holding ``(time, value)`` columns, or ``fit(times, values)``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import Branch, MomentPair, OgpParams, oscillate
from .covariance import CovarianceModel
from .estimators import (
    ObservationSet,
    alpha_estimates,
    lp_baseline,
    mesh_bound_h,
    moment_estimates,
    ss_moment_estimates,
)
from .validation import split_xy

__all__ = ["OscillatingMomentEstimator", "LejayPigatoEstimator", "Oscillator"]


class OscillatingMomentEstimator(BaseEstimator):
    """Method-of-moments estimator of ``(alpha_plus, alpha_minus)``.

    Parameters
    ----------
    branch : {'both-positive', 'mixed'}
        Root of the moment quadratic to report.
    self_similarity : float, optional
        Self-similarity index of the driver. When set, observations must lie
        in (0, 1] and are estimated in Lamperti time.
    cov_model : CovarianceModel, optional
        Driver covariance; only used to report the mesh bound ``h_N_``.

    Attributes
    ----------
    mu1_, mu2_ : float
    alpha_plus_, alpha_minus_ : float
    horizon_ : float
    report_ : EstimateReport
    """

    def __init__(self, branch="both-positive", self_similarity=None, cov_model=None):
        self.branch = branch
        self.self_similarity = self_similarity
        self.cov_model = cov_model

    def fit(self, X, y=None):
        t, x = split_xy(X, y)
        obs = ObservationSet(t, x, self.self_similarity)
        if self.self_similarity is None:
            m = moment_estimates(obs)
            delta = obs.delta_max
        else:
            m = ss_moment_estimates(obs, self.self_similarity)
            delta = float(np.max(np.diff(np.log(obs.times))))
        h = mesh_bound_h(self.cov_model, delta) if isinstance(self.cov_model, CovarianceModel) else None
        self.report_ = alpha_estimates(m, Branch.coerce(self.branch), delta_max=delta, h_N=h)
        self.mu1_, self.mu2_ = m.mu1, m.mu2
        self.alpha_plus_ = self.report_.alpha_plus_hat
        self.alpha_minus_ = self.report_.alpha_minus_hat
        self.horizon_ = m.horizon
        return self

    @property
    def moments_(self):
        check_is_fitted(self, "report_")
        return MomentPair(self.mu1_, self.mu2_, self.horizon_)


class LejayPigatoEstimator(BaseEstimator):
    """Sign-split realised-volatility baseline; ``None`` for unvisited regions."""

    def __init__(self, unit_steps=False):
        self.unit_steps = unit_steps

    def fit(self, X, y=None):
        t, x = split_xy(X, y)
        self.result_ = lp_baseline(ObservationSet(t, x), unit_steps=self.unit_steps)
        self.alpha_plus_ = self.result_.alpha_plus_hat
        self.alpha_minus_ = self.result_.alpha_minus_hat
        return self


class Oscillator(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping driver values to the oscillated process.

    ``inverse_transform`` recovers the driver when both parameters are positive.
    """

    def __init__(self, alpha_plus=1.0, alpha_minus=1.0):
        self.alpha_plus = alpha_plus
        self.alpha_minus = alpha_minus

    def _params(self):
        b = Branch.BOTH_POSITIVE if self.alpha_minus > 0 else Branch.MIXED_SIGN
        return OgpParams(self.alpha_plus, self.alpha_minus, b)

    def fit(self, X, y=None):
        self.params_ = self._params()
        return self

    def transform(self, X):
        return oscillate(np.asarray(X, dtype=float), self._params())

    def inverse_transform(self, X):
        p = self._params()
        if p.branch is not Branch.BOTH_POSITIVE:
            raise ValueError("the oscillation is not invertible unless both parameters are positive")
        X = np.asarray(X, dtype=float)
        return np.where(X > 0, X / p.alpha_plus, np.where(X < 0, X / p.alpha_minus, 0.0))
