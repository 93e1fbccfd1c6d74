"""Moment estimators for (alpha_plus, alpha_minus) from discrete observations.

The moment estimators are left-endpoint Riemann sums over the observation
span ``[t_0, t_N]``::

    mu_n = (1 / T_N) sum_k x_{k-1}^n (t_k - t_{k-1}),   T_N = t_N - t_0

and the parameters follow from the moment quadratic, with an absolute value
inside the square root so the map is total::

    alpha_plus  = sqrt(pi/2) mu_1 + |4 mu_2 - 2 pi mu_1^2|^{1/2} / 2
    alpha_minus = alpha_plus - sqrt(2 pi) mu_1
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import SQRT_2PI, SQRT_HALF_PI, Branch, MomentPair
from .covariance import CovarianceModel, variogram
from .validation import check_series

__all__ = [
    "ObservationSet",
    "EstimateReport",
    "LpEstimate",
    "moment_estimates",
    "alpha_estimates",
    "estimate",
    "lamperti_transform",
    "ss_moment_estimates",
    "mesh_bound_h",
    "lp_baseline",
]


@dataclass(frozen=True)
class ObservationSet:
    """Observed oscillated values ``x`` at strictly increasing ``times``."""

    times: np.ndarray
    x: np.ndarray
    hurst: Optional[float] = None

    def __post_init__(self):
        t, x = check_series(self.times, self.x)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "x", x)

    @property
    def horizon(self):
        return float(self.times[-1] - self.times[0])

    @property
    def delta_max(self):
        return float(np.max(np.diff(self.times)))

    @property
    def n_intervals(self):
        return len(self.times) - 1


@dataclass(frozen=True)
class EstimateReport:
    mu1_hat: float
    mu2_hat: float
    alpha_plus_hat: float
    alpha_minus_hat: float
    T: float
    delta_max: Optional[float] = None
    h_N: Optional[float] = None
    branch: str = Branch.BOTH_POSITIVE.value
    guard_active: bool = False

    def to_dict(self):
        return asdict(self)


def _riemann_moments(t, x):
    dt = np.diff(t)
    left = x[:-1]
    T = float(t[-1] - t[0])
    mu1 = math.fsum(left * dt) / T
    mu2 = math.fsum(left * left * dt) / T
    return mu1, mu2, T


def moment_estimates(obs: ObservationSet) -> MomentPair:
    """Left-endpoint Riemann moment estimators over ``[t_0, t_N]`` (compensated sums)."""
    mu1, mu2, T = _riemann_moments(obs.times, obs.x)
    return MomentPair(mu1, mu2, T)


def alpha_estimates(
    m: MomentPair, branch=Branch.BOTH_POSITIVE, *, delta_max=None, h_N=None, minus_constant=SQRT_2PI
) -> EstimateReport:
    """Map estimated moments to ``(alpha_plus_hat, alpha_minus_hat)``.

    The both-positive branch is the root with ``alpha_plus + alpha_minus >= 0``;
    the mixed branch takes the other root of the quadratic. Total on all finite
    inputs thanks to the absolute-value guard.

    ``minus_constant`` is the multiple of ``mu_1`` separating the two
    estimates. Only the default ``sqrt(2 pi)`` inverts the moment map;
    ``sqrt(pi/2)`` is accepted to demonstrate that it is inconsistent
    (it converges to ``(alpha_plus + alpha_minus) / 2``).
    """
    branch = Branch.coerce(branch)
    disc = 4.0 * m.mu2 - 2.0 * math.pi * m.mu1 ** 2
    root = 0.5 * math.sqrt(abs(disc))
    if branch is Branch.BOTH_POSITIVE:
        ap = SQRT_HALF_PI * m.mu1 + root
        am = ap - minus_constant * m.mu1
    else:
        am = -SQRT_HALF_PI * m.mu1 - root
        ap = am + minus_constant * m.mu1
    return EstimateReport(
        mu1_hat=m.mu1,
        mu2_hat=m.mu2,
        alpha_plus_hat=ap,
        alpha_minus_hat=am,
        T=m.horizon,
        delta_max=delta_max,
        h_N=h_N,
        branch=branch.value,
        guard_active=disc < 0,
    )


def estimate(obs: ObservationSet, branch=Branch.BOTH_POSITIVE, model: Optional[CovarianceModel] = None):
    """Moments plus parameters from a stationary-driver observation set."""
    m = moment_estimates(obs)
    h = mesh_bound_h(model, obs.delta_max) if model is not None else None
    return alpha_estimates(m, branch, delta_max=obs.delta_max, h_N=h)


def lamperti_transform(times, x, hurst):
    """Map observations of an ``hurst``-self-similar oscillation on (0, 1] to
    stationary time: ``s = -log u``, ``x~_s = u^{-hurst} x_u``.

    Returns the transformed series sorted by increasing ``s``.
    """
    u, x = check_series(times, x, positive_times=True)
    if u[-1] > 1.0:
        raise ValueError("self-similar observations must lie in (0, 1]")
    s = -np.log(u[::-1])
    xt = u[::-1] ** (-hurst) * x[::-1]
    return s, xt


def ss_moment_estimates(obs: ObservationSet, hurst: Optional[float] = None, T: Optional[float] = None) -> MomentPair:
    """Moment estimators for an oscillation driven by a self-similar process.

    The i-th moment is a Riemann sum of ``u^{-i H - 1} x_u^i du`` over the
    observation times in (0, 1]; equivalently the plain estimator applied to
    the Lamperti-transformed series (see :func:`lamperti_transform`), whose
    left endpoints in ``s = -log u`` are the right endpoints in ``u``.

    ``T`` defaults to the span in ``s``, i.e. ``-log(u_0)`` when the last
    observation is at ``u = 1``.
    """
    H = obs.hurst if hurst is None else hurst
    if H is None:
        raise ValueError("self-similar estimation needs the self-similarity index")
    if obs.times[0] <= 0:
        raise ValueError("self-similar observations need times > 0")
    s, xt = lamperti_transform(obs.times, obs.x, H)
    mu1, mu2, span = _riemann_moments(s, xt)
    if T is not None:
        mu1, mu2, span = mu1 * span / T, mu2 * span / T, float(T)
    return MomentPair(mu1, mu2, span)


def mesh_bound_h(model: CovarianceModel, delta: float, n_points: int = 1024) -> float:
    """``sup_{0 <= s <= delta} sqrt(c(s))`` on a uniform grid plus the endpoint."""
    if delta < 0:
        raise ValueError("mesh must be non-negative")
    if delta == 0:
        return 0.0
    s = np.linspace(0.0, delta, n_points + 1)
    return float(np.sqrt(np.max(variogram(model, s))))


@dataclass(frozen=True)
class LpEstimate:
    """Quadratic-variation estimates; ``None`` where a sign region was never visited."""

    alpha_plus_hat: Optional[float]
    alpha_minus_hat: Optional[float]
    n_plus: int
    n_minus: int

    @property
    def complete(self):
        return self.alpha_plus_hat is not None and self.alpha_minus_hat is not None

    def to_dict(self):
        return {
            "alpha_plus_hat": self.alpha_plus_hat,
            "alpha_minus_hat": self.alpha_minus_hat,
            "alpha_plus_available": self.alpha_plus_hat is not None,
            "alpha_minus_available": self.alpha_minus_hat is not None,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
        }


def lp_baseline(obs: ObservationSet, unit_steps: bool = False) -> LpEstimate:
    """Realised-volatility estimator split by the sign of the process.

    ``alpha_plus^2 = sum (dx_k)^2 1{x_{k-1} >= 0} / sum dt_k 1{x_{k-1} >= 0}``
    and likewise for ``alpha_minus`` with ``x_{k-1} <= 0``. With
    ``unit_steps=True`` every ``dt_k`` counts as 1, i.e. the denominator is the
    number of increments started in the region. A region the path never
    visits yields ``None``.
    """
    x, t = obs.x, obs.times
    dx2 = np.diff(x) ** 2
    dt = np.ones_like(dx2) if unit_steps else np.diff(t)
    left = x[:-1]
    pos, neg = left >= 0, left <= 0

    def one(mask):
        if not mask.any():
            return None
        return math.sqrt(math.fsum(dx2[mask]) / math.fsum(dt[mask]))

    return LpEstimate(one(pos), one(neg), int(pos.sum()), int(neg.sum()))
