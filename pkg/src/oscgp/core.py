"""Oscillation map and closed-form moment machinery.

For a standard normal driver value ``y`` the oscillated value is
``alpha_plus * y`` when ``y > 0`` and ``alpha_minus * y`` when ``y < 0``
(``0`` at ``y == 0``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import ParameterError, SeriesConvergenceError

__all__ = [
    "Branch",
    "OgpParams",
    "MomentPair",
    "HermiteCoeffs",
    "oscillate",
    "theoretical_moment",
    "invert_moments",
    "orthant_moment_series",
    "ogp_product_moment",
    "ogp_covariance",
    "hermite_coeffs",
    "half_gaussian_moment",
]

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
MAX_SERIES_TERMS = 100_000
MAX_HERMITE_ORDER = 30


class Branch(str, enum.Enum):
    """Root of the moment quadratic used when recovering the parameters.

    ``BOTH_POSITIVE`` is the root with ``alpha_plus + alpha_minus >= 0``,
    ``MIXED_SIGN`` the other one (``alpha_minus = -sqrt(pi/2) mu1 - sqrt(D)/2``).
    """

    BOTH_POSITIVE = "both-positive"
    MIXED_SIGN = "mixed"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"both-positive": cls.BOTH_POSITIVE, "bothpositive": cls.BOTH_POSITIVE,
                   "positive": cls.BOTH_POSITIVE, "mixed": cls.MIXED_SIGN,
                   "mixed-sign": cls.MIXED_SIGN, "mixedsign": cls.MIXED_SIGN}
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown branch {value!r}") from None


@dataclass(frozen=True)
class OgpParams:
    """Oscillation parameters.

    ``BOTH_POSITIVE`` requires both parameters > 0; ``MIXED_SIGN`` requires
    ``alpha_minus < 0 < alpha_plus``. Equal parameters are accepted (the
    oscillation is then a plain rescaling) and flagged by :attr:`degenerate`.
    """

    alpha_plus: float
    alpha_minus: float
    branch: Branch = Branch.BOTH_POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch.coerce(self.branch))
        ap, am = float(self.alpha_plus), float(self.alpha_minus)
        if not (np.isfinite(ap) and np.isfinite(am)):
            raise ParameterError("parameters must be finite")
        if self.branch is Branch.BOTH_POSITIVE and not (ap > 0 and am > 0):
            raise ParameterError(f"both-positive branch needs alpha_plus, alpha_minus > 0, got ({ap}, {am})")
        if self.branch is Branch.MIXED_SIGN and not (am < 0 < ap):
            raise ParameterError(f"mixed branch needs alpha_minus < 0 < alpha_plus, got ({ap}, {am})")

    @property
    def degenerate(self):
        return self.alpha_plus == self.alpha_minus

    @property
    def lipschitz(self):
        return max(abs(self.alpha_plus), abs(self.alpha_minus))

    def as_tuple(self):
        return (self.alpha_plus, self.alpha_minus)


def _params(params):
    if isinstance(params, OgpParams):
        return params
    ap, am = params
    return OgpParams(ap, am, Branch.BOTH_POSITIVE if am > 0 else Branch.MIXED_SIGN)


@dataclass(frozen=True)
class MomentPair:
    """First two moments; ``horizon`` is ``inf`` for theoretical values."""

    mu1: float
    mu2: float
    horizon: float = math.inf

    @property
    def discriminant(self):
        """``4 mu2 - 2 pi mu1^2``; equals ``(alpha_plus + alpha_minus)^2`` in theory."""
        return 4.0 * self.mu2 - 2.0 * math.pi * self.mu1 ** 2

    @classmethod
    def theoretical(cls, params):
        p = _params(params)
        return cls(theoretical_moment(1, p), theoretical_moment(2, p))


def oscillate(y, params):
    """Apply ``x = alpha_plus y 1{y>0} + alpha_minus y 1{y<0}`` elementwise."""
    p = _params(params)
    y = np.asarray(y, dtype=float)
    out = np.where(y > 0, p.alpha_plus * y, np.where(y < 0, p.alpha_minus * y, 0.0))
    return out if out.ndim else float(out)


def half_gaussian_moment(n):
    """``E[N^n 1{N>0}] = E|N|^n / 2`` for standard normal N."""
    return 2.0 ** (n / 2.0) * math.gamma((n + 1) / 2.0) / (2.0 * math.sqrt(math.pi))


def theoretical_moment(n: int, params) -> float:
    """Stationary moment ``E[X_t^n]``.

    ``2^{n/2} Gamma((n+1)/2) / (2 sqrt(pi)) * (alpha_plus^n + (-1)^n alpha_minus^n)``
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"moment order must be an integer >= 1, got {n}")
    n = int(n)
    p = _params(params)
    return half_gaussian_moment(n) * (p.alpha_plus ** n + (-1) ** n * p.alpha_minus ** n)


def invert_moments(m: MomentPair, branch=Branch.BOTH_POSITIVE) -> OgpParams:
    """Recover ``(alpha_plus, alpha_minus)`` from the first two moments.

    Both roots satisfy ``alpha_plus - alpha_minus = sqrt(2 pi) mu1``; the
    branch picks the sign of ``alpha_plus + alpha_minus = +/- sqrt(D)`` with
    ``D = |4 mu2 - 2 pi mu1^2|``. For mixed-sign parameters the moment pair
    does not identify the parameters: ``(a, -b)`` and ``(b, -a)`` share it,
    and the mixed branch returns the one with ``a <= b``.

    Raises
    ------
    ParameterError
        If ``mu2 <= 0`` or the selected root violates the branch's sign
        constraints.
    """
    branch = Branch.coerce(branch)
    if not m.mu2 > 0:
        raise ParameterError(f"second moment must be positive, got {m.mu2}")
    root = 0.5 * math.sqrt(abs(m.discriminant))
    if branch is Branch.BOTH_POSITIVE:
        ap = SQRT_HALF_PI * m.mu1 + root
        am = ap - SQRT_2PI * m.mu1
    else:
        am = -SQRT_HALF_PI * m.mu1 - root
        ap = am + SQRT_2PI * m.mu1
    return OgpParams(ap, am, branch)


def _log_gamma_terms(m, n, a, r):
    return (
        r * math.log(2.0 * abs(a))
        - special.gammaln(r + 1.0)
        + special.gammaln((n + r + 1.0) / 2.0)
        + special.gammaln((m + r + 1.0) / 2.0)
    )


def orthant_moment_series(m: int, n: int, a: float, tol: float = 1e-12) -> float:
    """``E[N1^m N2^n 1{N1>0, N2>0}]`` for standard normals with correlation ``a``.

    Expanding ``exp(2 a u v)`` in the rescaled double integral gives::

        2^{(m+n)/2} / (4 pi) (1 - a^2)^{(m+n+1)/2}
            * sum_r (2a)^r / r! Gamma((n+r+1)/2) Gamma((m+r+1)/2)

    The sum is truncated once a geometric envelope on the remaining terms
    (the larger of ``|a|`` and the current term ratio, whose limit is ``|a|``)
    falls below ``tol / 10``.

    Raises
    ------
    ParameterError
        If ``|a| >= 1`` or ``m``, ``n`` are not non-negative integers.
    SeriesConvergenceError
        If more than 100000 terms would be needed.
    """
    if int(m) != m or int(n) != n or m < 0 or n < 0:
        raise ParameterError("orders m, n must be non-negative integers")
    if not abs(a) < 1.0:
        raise ParameterError(f"correlation must satisfy |a| < 1, got {a}")
    m, n = int(m), int(n)
    pref = 2.0 ** ((m + n) / 2.0) / (4.0 * math.pi) * (1.0 - a * a) ** ((m + n + 1) / 2.0)
    if a == 0.0:
        return pref * math.gamma((n + 1) / 2.0) * math.gamma((m + 1) / 2.0)

    target = tol / 10.0
    chunk = 256
    start = 0
    terms = []
    sign = -1.0 if a < 0 else 1.0
    while start < MAX_SERIES_TERMS:
        r = np.arange(start, start + chunk + 1, dtype=float)
        logt = _log_gamma_terms(m, n, a, r)
        terms.extend((np.exp(logt[:-1]) * sign ** r[:-1]).tolist())
        # the term ratio tends to |a| monotonically, from above or from below
        last_ratio = math.exp(logt[-1] - logt[-2])
        settled = last_ratio <= abs(a) or last_ratio <= math.exp(logt[-2] - logt[-3])
        rho = max(last_ratio, abs(a))
        if settled and rho < 1.0:
            envelope = pref * math.exp(logt[-1]) / (1.0 - rho)
            if envelope < target:
                # fsum keeps the alternating case (a < 0) accurate
                return pref * math.fsum(terms)
        start += chunk
        chunk = min(2 * chunk, 8192)
    raise SeriesConvergenceError(
        f"orthant series for (m={m}, n={n}, a={a}) did not converge in {MAX_SERIES_TERMS} terms"
    )


def ogp_product_moment(n: int, a: float, params, tol: float = 1e-12) -> float:
    """``E[X_t^n X_s^n]`` when the driver correlation is ``a = r(t - s)``.

    Splits on the four sign quadrants: both-positive and both-negative each
    contribute ``S(n, n, a)``, the two mixed quadrants ``(-1)^n S(n, n, -a)``.
    """
    if int(n) != n or n < 1:
        raise ParameterError("order must be an integer >= 1")
    n = int(n)
    p = _params(params)
    same = orthant_moment_series(n, n, a, tol)
    cross = (-1) ** n * orthant_moment_series(n, n, -a, tol)
    ap, am = p.alpha_plus, p.alpha_minus
    return (ap ** (2 * n) + am ** (2 * n)) * same + 2.0 * ap ** n * am ** n * cross


def ogp_covariance(n: int, a: float, params, tol: float = 1e-12) -> float:
    """``Cov(X_t^n, X_s^n)``; vanishes at ``a = 0`` and is ``O(|a|)``."""
    return ogp_product_moment(n, a, params, tol) - theoretical_moment(n, params) ** 2


@dataclass(frozen=True)
class HermiteCoeffs:
    """Hermite expansion ``f_i(x) = sum_k coeffs[k] He_k(x)``.

    ``He_k`` are the probabilists' Hermite polynomials, ``E[He_j He_k] = k! delta_jk``.
    """

    which: str
    coeffs: np.ndarray
    params: OgpParams
    convention: str = "probabilists"

    @property
    def k_max(self):
        return len(self.coeffs) - 1

    @property
    def rank(self):
        """Smallest ``k >= 1`` with a non-negligible coefficient (None if all vanish)."""
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        nz = np.flatnonzero(np.abs(self.coeffs[1:]) > 1e-13 * scale)
        return int(nz[0]) + 1 if nz.size else None

    def energy(self):
        """Partial Parseval sum ``sum_k k! coeffs[k]^2``."""
        k = np.arange(len(self.coeffs))
        return float(np.sum(special.factorial(k) * self.coeffs ** 2))

    def __call__(self, x):
        from numpy.polynomial import hermite_e

        return hermite_e.hermeval(np.asarray(x, dtype=float), self.coeffs)


def _half_line_moments(power, k_max, n_nodes):
    """``J[k] = E[N^power He_k(N) 1{N>0}]`` for ``k = 0..k_max``.

    The integrand on (0, inf) is a polynomial times the Gaussian density.
    Even polynomials become polynomials in ``s = x^2/2`` against
    ``s^{-1/2} e^{-s}`` (generalised Gauss-Laguerre, alpha = -1/2); odd ones,
    after dividing by ``x``, against ``e^{-s}`` (alpha = 0). Both rules are
    exact once ``n_nodes`` exceeds half the degree.
    """
    out = np.empty(k_max + 1)
    s_even, w_even = special.roots_genlaguerre(n_nodes, -0.5)
    s_odd, w_odd = special.roots_laguerre(n_nodes)
    x_even = np.sqrt(2.0 * s_even)
    x_odd = np.sqrt(2.0 * s_odd)
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    for k in range(k_max + 1):
        if (power + k) % 2 == 0:
            vals = x_even ** power * special.eval_hermitenorm(k, x_even)
            out[k] = norm * np.sum(w_even * vals) / math.sqrt(2.0)
        else:
            vals = x_odd ** (power - 1) * special.eval_hermitenorm(k, x_odd)
            out[k] = norm * np.sum(w_odd * vals)
    return out


def hermite_coeffs(which: str, params, k_max: int = 10, n_nodes: int = 48) -> HermiteCoeffs:
    """Hermite coefficients of ``f1`` (the map ``y -> X``) or ``f2`` (``y -> X^2``).

    ``f1(x) = alpha_plus x 1{x>0} + alpha_minus x 1{x<0}`` and
    ``f2(x) = alpha_plus^2 x^2 1{x>0} + alpha_minus^2 x^2 1{x<0}``, so that
    ``coeffs[0]`` equals ``mu1`` and ``mu2`` respectively.

    Coefficients are ``E[f(N) He_k(N)] / k!``, integrated separately on each
    half line with Gauss rules (see :func:`_half_line_moments`), and checked
    against a rule with 16 more nodes.

    Raises
    ------
    ParameterError
        For unknown ``which`` or ``k_max`` outside ``0..30``.
    SeriesConvergenceError
        If the two node counts disagree by more than 1e-10.
    """
    if which not in ("f1", "f2"):
        raise ParameterError(f"which must be 'f1' or 'f2', got {which!r}")
    if int(k_max) != k_max or not 0 <= k_max <= MAX_HERMITE_ORDER:
        raise ParameterError(f"k_max must be an integer in [0, {MAX_HERMITE_ORDER}]")
    k_max = int(k_max)
    p = _params(params)
    power = 1 if which == "f1" else 2
    cp, cm = p.alpha_plus ** power, p.alpha_minus ** power
    k = np.arange(k_max + 1)
    fact = special.factorial(k, exact=False)
    parity = (-1.0) ** (power + k)

    def compute(nodes):
        J = _half_line_moments(power, k_max, nodes)
        return (cp * J + cm * parity * J) / fact

    coeffs = compute(n_nodes)
    check = compute(n_nodes + 16)
    scale = np.maximum(1.0, np.abs(coeffs))
    if np.any(np.abs(coeffs - check) > 1e-10 * scale):
        raise SeriesConvergenceError("Hermite coefficient quadrature did not converge")
    return HermiteCoeffs(which, coeffs, p)
