"""Stationary driver covariance models.

Every model is a unit-variance stationary correlation function ``r(t)``
evaluated through its even extension, tagged with one of three decay
regimes that fix the normalising rate of the moment estimators:

    ========== ====================== =====================
    regime     tail of r(t)           normaliser l(T)
    ========== ====================== =====================
    integrable r in L^1               sqrt(T)
    border     r(t) ~ C / t           sqrt(T / log T)
    long_range r(t) ~ C t^(2H-2)      T^(1-H)
    ========== ====================== =====================

The border regime is read as ``t * r(t) -> C``; the condition
``r(t) / t -> C`` holds for every bounded kernel and cannot produce the
logarithmic normaliser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ParameterError, UnclassifiableKernelError

__all__ = [
    "DecayRegime",
    "CovarianceModel",
    "Exponential",
    "BorderCauchy",
    "FgnLike",
    "LampertiBifbm",
    "TabulatedKernel",
    "eval_cov",
    "classify_decay",
    "variogram",
    "bifbm_cov",
    "model_from_dict",
]

_REGIME_CASES = ("integrable", "border", "long_range")


@dataclass(frozen=True)
class DecayRegime:
    """Decay class of a covariance function.

    Parameters
    ----------
    case : {'integrable', 'border', 'long_range'}
    hurst : float, optional
        Long-range index in (1/2, 1); required for ``long_range`` only.
    """

    case: str
    hurst: Optional[float] = None

    def __post_init__(self):
        if self.case not in _REGIME_CASES:
            raise ParameterError(f"unknown decay regime {self.case!r}")
        if self.case == "long_range":
            if self.hurst is None or not 0.5 < self.hurst < 1.0:
                raise ParameterError("long_range regime needs hurst in (1/2, 1)")
        elif self.hurst is not None:
            raise ParameterError(f"{self.case} regime takes no hurst index")

    def rate(self, T):
        """Normalising function ``l(T)``; increases to infinity."""
        T = np.asarray(T, dtype=float)
        if self.case == "integrable":
            out = np.sqrt(T)
        elif self.case == "border":
            out = np.sqrt(T / np.log(T))
        else:
            out = T ** (1.0 - self.hurst)
        return out if out.ndim else float(out)

    @property
    def rate_exponent(self):
        """Power of T in ``l(T)``, ignoring logarithmic factors."""
        return 1.0 - self.hurst if self.case == "long_range" else 0.5

    @property
    def description(self):
        return {
            "integrable": "sqrt(T)",
            "border": "sqrt(T/log T)",
            "long_range": f"T^{1.0 - (self.hurst or 0):.6g}",
        }[self.case]


class CovarianceModel:
    """Base class for stationary unit-variance correlation functions.

    Subclasses implement ``_r(t)`` for ``t >= 0`` arrays; calling the model
    evaluates the even extension.
    """

    kind: str = ""

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        out = self._r(t)
        return out if np.ndim(out) else float(out)

    def _r(self, t):
        raise NotImplementedError

    @property
    def regime(self) -> DecayRegime:
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(CovarianceModel):
    """Ornstein-Uhlenbeck correlation ``exp(-theta |t|)``."""

    theta: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise ParameterError(f"theta must be > 0, got {self.theta}")

    def _r(self, t):
        return np.exp(-self.theta * t)

    @property
    def regime(self):
        return DecayRegime("integrable")

    def to_dict(self):
        return {"kind": self.kind, "params": {"theta": self.theta}}


@dataclass(frozen=True)
class BorderCauchy(CovarianceModel):
    """``r(t) = 1 / (1 + |t|)``, the border case between short and long memory."""

    kind = "border"

    def _r(self, t):
        return 1.0 / (1.0 + t)

    @property
    def regime(self):
        return DecayRegime("border")

    def to_dict(self):
        return {"kind": self.kind, "params": {}}


@dataclass(frozen=True)
class FgnLike(CovarianceModel):
    """Correlation of the unit-lag increment process ``B^H_{t+1} - B^H_t``.

    ``r(t) = ((t+1)^{2H} - 2 t^{2H} + |t-1|^{2H}) / 2``, which behaves like
    ``H(2H-1) t^{2H-2}`` at infinity.
    """

    hurst: float = 0.8
    kind = "fgn"

    def __post_init__(self):
        if not 0.5 <= self.hurst < 1.0:
            raise ParameterError(f"hurst must lie in [1/2, 1), got {self.hurst}")

    def _r(self, t):
        h2 = 2.0 * self.hurst
        t = np.asarray(t, dtype=float)
        if self.hurst == 0.5:
            return np.maximum(1.0 - t, 0.0)
        near = np.minimum(t, 2.0)
        direct = 0.5 * ((near + 1.0) ** h2 - 2.0 * near ** h2 + np.abs(near - 1.0) ** h2)
        # second difference of t^{2H} loses ~t digits when expanded naively
        far = np.maximum(t, 2.0)
        inv = 1.0 / far
        tail = 0.5 * far ** h2 * (np.expm1(h2 * np.log1p(inv)) + np.expm1(h2 * np.log1p(-inv)))
        return np.where(t <= 2.0, direct, tail)

    @property
    def regime(self):
        if self.hurst == 0.5:
            return DecayRegime("integrable")
        return DecayRegime("long_range", self.hurst)

    def to_dict(self):
        return {"kind": self.kind, "params": {"hurst": self.hurst}}


@dataclass(frozen=True)
class LampertiBifbm(CovarianceModel):
    """Correlation of ``U_t = e^{-HKt} B^{H,K}_{e^t}`` for bifractional B^{H,K}.

    ``r(t) = e^{-HKt} 2^{-K} [(1 + e^{2Ht})^K - (e^t - 1)^{2HK}]``, rewritten
    as ``2^{-K} e^{HKt} [expm1(K log1p(e^{-2Ht})) - expm1(2HK log1p(-e^{-t}))]``
    so the difference of two large powers never cancels; both bracket terms
    are positive and are combined on the log scale.
    """

    hurst: float = 0.5
    kk: float = 1.0
    kind = "lamperti_bifbm"

    def __post_init__(self):
        _check_bifbm(self.hurst, self.kk)

    @property
    def self_similarity(self):
        return self.hurst * self.kk

    def _r(self, t):
        H, K = self.hurst, self.kk
        c = 2.0 * H * K
        t = np.asarray(t, dtype=float)
        x, y = np.exp(-2.0 * H * t), np.exp(-t)
        # log of each bracket term, switching to two-term expansions once the
        # exponentials are below ~1e-8 so that neither underflows
        with np.errstate(divide="ignore"):
            la = np.where(
                2.0 * H * t > 18.0,
                np.log(K) - 2.0 * H * t + np.log1p(0.5 * (K - 1.0) * x),
                np.log(np.expm1(K * np.log1p(x))),
            )
            lb = np.where(
                t > 18.0,
                np.log(c) - t + np.log1p(0.5 * (1.0 - c) * y),
                np.log(-np.expm1(c * np.log1p(-y))),
            )
        r = 2.0 ** -K * (np.exp(0.5 * c * t + la) + np.exp(0.5 * c * t + lb))
        return np.where(t == 0, 1.0, r)

    @property
    def regime(self):
        return DecayRegime("integrable")

    def to_dict(self):
        return {"kind": self.kind, "params": {"hurst": self.hurst, "kk": self.kk}}


@dataclass(frozen=True)
class TabulatedKernel(CovarianceModel):
    """User-supplied correlation function.

    ``func`` must accept non-negative arrays and satisfy ``func(0) == 1``.
    The decay regime cannot be inferred and must be declared.
    """

    func: Callable = field(compare=False)
    declared_regime: Optional[DecayRegime] = None
    name: str = "tabulated"
    kind = "tabulated"

    def __post_init__(self):
        r0 = float(np.asarray(self.func(np.zeros(1)), dtype=float).ravel()[0])
        if not math.isclose(r0, 1.0, rel_tol=0, abs_tol=1e-12):
            raise ParameterError(f"tabulated kernel must satisfy r(0) = 1, got {r0}")

    def _r(self, t):
        return np.asarray(self.func(t), dtype=float)

    @property
    def regime(self):
        if self.declared_regime is None:
            raise UnclassifiableKernelError(
                f"kernel {self.name!r} has no declared decay regime"
            )
        return self.declared_regime

    def __hash__(self):
        return hash((id(self.func), self.declared_regime, self.name))

    def __eq__(self, other):
        return (
            isinstance(other, TabulatedKernel)
            and self.func is other.func
            and self.declared_regime == other.declared_regime
            and self.name == other.name
        )

    def to_dict(self):
        raise TypeError("tabulated kernels hold a function handle and are not serialisable")


def _check_bifbm(H, K):
    if not 0.0 < H < 1.0:
        raise ParameterError(f"bifractional H must lie in (0, 1), got {H}")
    if not 0.0 < K < 2.0:
        raise ParameterError(f"bifractional K must lie in (0, 2), got {K}")
    if not 0.0 < H * K < 1.0:
        raise ParameterError(f"bifractional HK must lie in (0, 1), got {H * K}")


def eval_cov(model: CovarianceModel, t):
    """Evaluate ``r(t)`` (even extension) for a registry model."""
    return model(t)


def classify_decay(model: CovarianceModel) -> DecayRegime:
    """Return the decay regime of ``model``."""
    return model.regime


def variogram(model: CovarianceModel, t):
    """Variogram ``c(t) = 2 (r(0) - r(t)) = 2 (1 - r(t))``."""
    c = 2.0 * (1.0 - np.asarray(model(t), dtype=float))
    c = np.clip(c, 0.0, 4.0)
    return c if c.ndim else float(c)


def bifbm_cov(H, K, s, t):
    """Bifractional Brownian covariance ``2^{-K}[(t^{2H}+s^{2H})^K - |t-s|^{2HK}]``."""
    _check_bifbm(H, K)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ParameterError("bifractional covariance is defined for s, t >= 0")
    out = 2.0 ** -K * ((t ** (2 * H) + s ** (2 * H)) ** K - np.abs(t - s) ** (2 * H * K))
    return out if out.ndim else float(out)


_ALIASES = {
    "exp": "exponential",
    "exponential": "exponential",
    "ou": "exponential",
    "border": "border",
    "border_cauchy": "border",
    "cauchy": "border",
    "fgn": "fgn",
    "fgn_like": "fgn",
    "lamperti_bifbm": "lamperti_bifbm",
}


def model_from_dict(obj) -> CovarianceModel:
    """Build a model from ``{"kind": ..., "params": {...}}``."""
    try:
        kind = _ALIASES[str(obj["kind"]).lower()]
    except KeyError:
        raise ParameterError(f"unknown covariance kind in {obj!r}") from None
    params = dict(obj.get("params") or {})
    if kind == "exponential":
        return Exponential(float(params.get("theta", 1.0)))
    if kind == "border":
        if params:
            raise ParameterError("border kernel takes no parameters")
        return BorderCauchy()
    if kind == "fgn":
        return FgnLike(float(params["hurst"]))
    return LampertiBifbm(float(params["hurst"]), float(params["kk"]))
