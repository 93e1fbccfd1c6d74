"""Exact Gaussian path generation.

Stationary models on equidistant grids are drawn by circulant embedding;
arbitrary covariances (e.g. bifractional Brownian motion) by Cholesky
factorisation. All randomness flows through :class:`RngStream`, so a path
is a pure function of ``(model, grid, seed, index)``.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import lapack

from .covariance import CovarianceModel
from .exceptions import NotPositiveDefiniteError, ParameterError

logger = logging.getLogger(__name__)

__all__ = [
    "TimeGrid",
    "RngStream",
    "SamplePath",
    "sample_stationary",
    "sample_general",
    "covariance_factor",
    "embedding_eigenvalues",
    "embedding_min_eigenvalue",
    "auto_mesh_grid",
]

# eigenvalues below -NEG_TOL_PER_POINT * m are "genuinely negative"
NEG_TOL_PER_POINT = 1e-8
# ... and may still be truncated if their total mass is below this fraction of the trace
NEG_MASS_FRACTION = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant grid ``t0 + k dt``, ``k = 0..n-1``."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not self.t0 >= 0:
            raise ParameterError(f"grid start must be >= 0, got {self.t0}")
        if not self.dt > 0:
            raise ParameterError(f"grid step must be > 0, got {self.dt}")
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"grid needs n >= 2 points, got {self.n}")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def horizon(self):
        return (self.n - 1) * self.dt

    @classmethod
    def from_horizon(cls, T, dt, t0=0.0):
        """Grid covering ``[t0, t0 + T]`` with step ``dt`` (T rounded to a multiple of dt)."""
        n = int(round(T / dt)) + 1
        return cls(t0, dt, n)


def auto_mesh_grid(n: int, t0: float = 0.0) -> TimeGrid:
    """``n`` equidistant points with step ``log(n) / n``, so ``T_N ~ log N``."""
    return TimeGrid(t0, float(np.log(n) / n), n)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(seed, index, label)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    distinct indices give statistically independent generators.
    """

    seed: int
    index: int = 0
    label: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.label), int(self.index)))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SamplePath:
    """Driver values ``y`` on ``times``; ``x`` filled in once oscillated."""

    times: np.ndarray
    y: np.ndarray
    seed: Optional[int] = None
    index: Optional[int] = None
    model: Optional[dict] = None
    grid: Optional[TimeGrid] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.y) != len(self.times):
            raise ValueError("path values and times differ in length")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("path contains non-finite values")


def _as_rng(rng):
    if isinstance(rng, RngStream):
        return rng.generator(), rng.seed, rng.index
    if isinstance(rng, np.random.Generator):
        return rng, None, None
    return RngStream(int(rng)).generator(), int(rng), 0


def embedding_eigenvalues(model: CovarianceModel, grid: TimeGrid) -> np.ndarray:
    """Eigenvalues of the minimal circulant embedding of ``r(k dt)``, ``k < n``."""
    return _embedding_eigs(model, float(grid.dt), int(grid.n)).copy()


@functools.lru_cache(maxsize=32)
def _embedding_eigs(model, dt, n):
    r = np.asarray(model(dt * np.arange(n)), dtype=float)
    row = np.concatenate([r, r[-2:0:-1]])
    return np.fft.rfft(row).real


def embedding_min_eigenvalue(model: CovarianceModel, grid: TimeGrid) -> float:
    """Smallest eigenvalue of the circulant embedding (fast path usable if >= -tol)."""
    return float(_embedding_eigs(model, float(grid.dt), int(grid.n)).min())


def _usable_eigs(model, grid):
    """Clipped eigenvalues for the FFT sampler, or None if embedding is unusable."""
    lam = _embedding_eigs(model, float(grid.dt), int(grid.n))
    m = 2 * (grid.n - 1)
    bad = lam < -NEG_TOL_PER_POINT * m
    if np.any(bad):
        # rfft holds each interior frequency once but it counts twice in the trace
        w = np.full(lam.shape, 2.0)
        w[0] = w[-1] = 1.0
        neg_mass = -np.sum(w * np.minimum(lam, 0.0))
        if neg_mass >= NEG_MASS_FRACTION * np.sum(w * np.maximum(lam, 0.0)):
            return None
        logger.debug("truncating %d negative embedding eigenvalues (mass %.3g)", bad.sum(), neg_mass)
    return np.maximum(lam, 0.0)


def _circulant_draw(lam, n, gen):
    m = 2 * (n - 1)
    full = np.concatenate([lam, lam[-2:0:-1]])
    z = gen.standard_normal(m) + 1j * gen.standard_normal(m)
    w = np.fft.fft(np.sqrt(full / m) * z)
    return w.real[:n]


def sample_stationary(model: CovarianceModel, grid: TimeGrid, rng) -> SamplePath:
    """Draw the driver on ``grid`` with covariance ``[r(|i-j| dt)]``.

    Uses circulant embedding; small negative embedding eigenvalues are
    truncated when their mass is negligible, otherwise the draw falls back to
    Cholesky factorisation of the full Toeplitz matrix.

    Parameters
    ----------
    model : CovarianceModel
    grid : TimeGrid
    rng : RngStream, numpy Generator or int seed

    Returns
    -------
    SamplePath
    """
    gen, seed, index = _as_rng(rng)
    lam = _usable_eigs(model, grid)
    descriptor = _describe(model)
    if lam is None:
        logger.warning("circulant embedding not PSD for %s; falling back to Cholesky", descriptor)
        times = grid.times
        lags = grid.dt * np.abs(np.arange(grid.n)[:, None] - np.arange(grid.n)[None, :])
        factor = _cholesky(np.asarray(model(lags), dtype=float))
        y = factor @ gen.standard_normal(grid.n)
    else:
        times = grid.times
        y = _circulant_draw(lam, grid.n, gen)
    return SamplePath(times, y, seed, index, descriptor, grid)


def _describe(model):
    try:
        return model.to_dict()
    except TypeError:
        return {"kind": getattr(model, "kind", "custom")}


def _cholesky(C):
    """Lower Cholesky factor; exact zero rows are pinned to a deterministic 0."""
    C = np.asarray(C, dtype=float)
    zero = (np.diag(C) == 0) & np.all(C == 0, axis=1)
    L = np.zeros_like(C)
    keep = np.flatnonzero(~zero)
    if keep.size == 0:
        return L
    sub = C[np.ix_(keep, keep)]
    low, info = lapack.dpotrf(sub, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(keep[info - 1]) + 1)
    if info < 0:
        raise ValueError(f"invalid covariance matrix (lapack info {info})")
    L[np.ix_(keep, keep)] = low
    return L


def covariance_factor(cov: Callable, times) -> np.ndarray:
    """Lower Cholesky factor of ``[cov(t_i, t_j)]``.

    No jitter is added; a matrix that is not numerically positive definite
    raises :class:`NotPositiveDefiniteError`. Rows whose covariance is
    identically zero (e.g. a self-similar process at t = 0) are deterministic.
    """
    times = np.asarray(times, dtype=float)
    C = np.asarray(cov(times[:, None], times[None, :]), dtype=float)
    C = np.broadcast_to(C, (len(times), len(times)))
    if not np.allclose(C, C.T, rtol=1e-12, atol=1e-14):
        raise ParameterError("covariance is not symmetric on the grid")
    return _cholesky(0.5 * (C + C.T))


def sample_general(
    cov: Callable,
    grid: Union[TimeGrid, Sequence[float]],
    rng,
    factor: Optional[np.ndarray] = None,
) -> SamplePath:
    """Draw a centred Gaussian vector with covariance ``[cov(t_i, t_j)]``.

    ``grid`` may be a :class:`TimeGrid` or any strictly increasing array of
    times (e.g. a geometric grid for the Lamperti route). Pass a precomputed
    ``factor`` from :func:`covariance_factor` to skip the factorisation when
    drawing many replications on the same grid.
    """
    if isinstance(grid, TimeGrid):
        times, tg = grid.times, grid
    else:
        times, tg = np.asarray(grid, dtype=float), None
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ParameterError("times must be strictly increasing with at least 2 points")
    gen, seed, index = _as_rng(rng)
    if factor is None:
        factor = covariance_factor(cov, times)
    y = factor @ gen.standard_normal(len(times))
    return SamplePath(times, y, seed, index, None, tg)
