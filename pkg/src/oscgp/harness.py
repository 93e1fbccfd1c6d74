"""Monte Carlo experiments for the consistency and normality of the estimators.

Each replication is a pure function of ``(spec, horizon index, replication
index)``: its random stream is ``RngStream(seed, rep, label=horizon index)``.
Results are materialised sorted by index before any statistic is computed,
so reports do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .core import Branch, OgpParams, oscillate, theoretical_moment
from .covariance import (
    CovarianceModel,
    DecayRegime,
    bifbm_cov,
    classify_decay,
    model_from_dict,
    _check_bifbm,
)
from .estimators import ObservationSet, alpha_estimates, moment_estimates, ss_moment_estimates
from .exceptions import ParameterError, ReplicationError
from .simulation import RngStream, TimeGrid, covariance_factor, sample_general, sample_stationary

logger = logging.getLogger(__name__)

__all__ = [
    "BifbmDriver",
    "ExperimentSpec",
    "McReport",
    "run_consistency",
    "run_clt",
    "fit_rate",
    "ks_normality",
    "discretization_gaps",
    "COORDS",
]

COORDS = ("alpha_plus", "alpha_minus", "mu1", "mu2")
MIN_REPLICATIONS = 50
MIN_CLT_REPLICATIONS = 200
MAX_AUTO_POINTS = 10_000_000
N_PROJECTIONS = 8
_PROJECTION_SEED = 20_190_917


@dataclass(frozen=True)
class BifbmDriver:
    """Bifractional Brownian driver observed on (0, 1]; estimated via Lamperti time."""

    hurst: float
    kk: float
    kind = "bifbm"

    def __post_init__(self):
        _check_bifbm(self.hurst, self.kk)

    @property
    def self_similarity(self):
        return self.hurst * self.kk

    @property
    def regime(self):
        return DecayRegime("integrable")

    def cov(self, s, t):
        return bifbm_cov(self.hurst, self.kk, s, t)

    def to_dict(self):
        return {"kind": self.kind, "params": {"hurst": self.hurst, "kk": self.kk}}


@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of a Monte Carlo study.

    ``mesh`` is ``"fixed"`` (step ``dt``) or ``"auto"`` (``N`` intervals with
    ``log N = T``, i.e. step ``log N / N``). For a :class:`BifbmDriver` the
    horizon and mesh refer to Lamperti time ``s = -log u``.
    """

    model: object
    params: OgpParams
    horizons: Sequence[float]
    replications: int
    mesh: str = "fixed"
    dt: float = 0.01
    p_list: Sequence[float] = (1.0, 2.0)
    seed: int = 0
    n_jobs: int = 1
    branch: Branch = Branch.BOTH_POSITIVE

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(float(T) for T in self.horizons))
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))
        object.__setattr__(self, "branch", Branch.coerce(self.branch))
        if not self.horizons:
            raise ParameterError("at least one horizon is required")
        if any(T <= 0 for T in self.horizons) or any(
            b <= a for a, b in zip(self.horizons, self.horizons[1:])
        ):
            raise ParameterError("horizons must be positive and strictly increasing")
        if self.replications < MIN_REPLICATIONS:
            raise ParameterError(f"need at least {MIN_REPLICATIONS} replications, got {self.replications}")
        if self.mesh not in ("fixed", "auto"):
            raise ParameterError(f"mesh rule must be 'fixed' or 'auto', got {self.mesh!r}")
        if self.mesh == "fixed" and not self.dt > 0:
            raise ParameterError("fixed mesh needs dt > 0")
        if any(p < 1 for p in self.p_list):
            raise ParameterError("L^p orders must be >= 1")
        # fails early for kernels without a regime
        self.regime

    @property
    def self_similar(self):
        return isinstance(self.model, BifbmDriver)

    @property
    def regime(self) -> DecayRegime:
        return self.model.regime if self.self_similar else classify_decay(self.model)

    def intervals(self, T):
        """Number of grid intervals and the step used at horizon ``T``."""
        if self.mesh == "fixed":
            n = int(round(T / self.dt))
            return n, self.dt
        n = int(math.ceil(math.exp(T)))
        if n > MAX_AUTO_POINTS:
            raise ParameterError(f"auto mesh at T={T} needs {n} points; use a fixed mesh")
        return n, T / n

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "params": {
                "alpha_plus": self.params.alpha_plus,
                "alpha_minus": self.params.alpha_minus,
                "branch": self.params.branch.value,
            },
            "horizons": list(self.horizons),
            "replications": self.replications,
            "mesh": {"rule": self.mesh, "dt": self.dt} if self.mesh == "fixed" else {"rule": "auto"},
            "p": list(self.p_list),
            "seed": self.seed,
            "n_jobs": self.n_jobs,
            "branch": self.branch.value,
        }

    @classmethod
    def from_dict(cls, obj):
        model_obj = obj["model"]
        if str(model_obj.get("kind", "")).lower() == "bifbm":
            mp = model_obj.get("params", {})
            model = BifbmDriver(float(mp["hurst"]), float(mp["kk"]))
        else:
            model = model_from_dict(model_obj)
        pp = obj["params"]
        branch = Branch.coerce(pp.get("branch", "both-positive"))
        params = OgpParams(float(pp["alpha_plus"]), float(pp["alpha_minus"]), branch)
        mesh = obj.get("mesh", {"rule": "fixed", "dt": 0.01})
        if isinstance(mesh, str):
            mesh = {"rule": mesh}
        return cls(
            model=model,
            params=params,
            horizons=obj["horizons"],
            replications=int(obj["replications"]),
            mesh=mesh.get("rule", "fixed"),
            dt=float(mesh.get("dt", 0.01)),
            p_list=obj.get("p", (1.0, 2.0)),
            seed=int(obj.get("seed", 0)),
            n_jobs=int(obj.get("n_jobs", 1)),
            branch=obj.get("branch", branch.value),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


_FACTOR_CACHE: dict = {}


def _lamperti_factor(driver, u):
    key = (driver.hurst, driver.kk, u.size, float(u[0]), float(u[-1]))
    if key not in _FACTOR_CACHE:
        if len(_FACTOR_CACHE) > 8:
            _FACTOR_CACHE.clear()
        _FACTOR_CACHE[key] = covariance_factor(driver.cov, u)
    return _FACTOR_CACHE[key]


def simulate_estimate(spec: ExperimentSpec, h_idx: int, rep: int):
    """One replication: simulate, oscillate, estimate. Returns a dict of estimates."""
    T = spec.horizons[h_idx]
    rng = RngStream(spec.seed, rep, label=h_idx)
    n, step = spec.intervals(T)
    try:
        if spec.self_similar:
            s = step * np.arange(n + 1)
            u = np.exp(-s[::-1])
            path = sample_general(spec.model.cov, u, rng, factor=_lamperti_factor(spec.model, u))
            x = oscillate(path.y, spec.params)
            obs = ObservationSet(u, x, spec.model.self_similarity)
            m = ss_moment_estimates(obs)
        else:
            grid = TimeGrid(0.0, step, n + 1)
            path = sample_stationary(spec.model, grid, rng)
            x = oscillate(path.y, spec.params)
            m = moment_estimates(ObservationSet(path.times, x))
    except Exception as exc:  # noqa: BLE001 - re-raised with coordinates
        raise ReplicationError(T, rep, exc) from exc
    est = alpha_estimates(m, spec.branch)
    return {
        "rep": rep,
        "T": m.horizon,
        "alpha_plus": est.alpha_plus_hat,
        "alpha_minus": est.alpha_minus_hat,
        "mu1": est.mu1_hat,
        "mu2": est.mu2_hat,
    }


def _run_batch(spec, tasks):
    return [simulate_estimate(spec, h, r) for h, r in tasks]


def _collect(spec: ExperimentSpec, horizon_indices):
    tasks = [(h, r) for h in horizon_indices for r in range(spec.replications)]
    if spec.n_jobs == 1:
        rows = _run_batch(spec, tasks)
    else:
        from joblib import Parallel, delayed, effective_n_jobs

        workers = effective_n_jobs(spec.n_jobs)
        chunks = [tasks[i::workers * 4] for i in range(workers * 4)]
        parts = Parallel(n_jobs=spec.n_jobs)(delayed(_run_batch)(spec, c) for c in chunks if c)
        keyed = {}
        for part, chunk in zip(parts, [c for c in chunks if c]):
            keyed.update(zip(chunk, part))
        rows = [keyed[t] for t in tasks]
    out = {}
    for h in horizon_indices:
        block = [row for (hh, _), row in zip(tasks, rows) if hh == h]
        block.sort(key=lambda row: row["rep"])
        out[h] = {c: np.array([row[c] for row in block]) for c in ("rep", "T") + COORDS}
    return out


def _truth(params):
    return {
        "alpha_plus": params.alpha_plus,
        "alpha_minus": params.alpha_minus,
        "mu1": theoretical_moment(1, params),
        "mu2": theoretical_moment(2, params),
    }


@dataclass
class McReport:
    """Aggregated results of a Monte Carlo study (see :meth:`to_dict` for layout)."""

    kind: str
    spec: ExperimentSpec
    regime: DecayRegime
    truth: dict
    horizons: list
    estimates: dict
    lp_errors: dict = field(default_factory=dict)
    rms: dict = field(default_factory=dict)
    bias: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    normalized: dict = field(default_factory=dict)
    normality: dict = field(default_factory=dict)
    sigma_hat: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    def errors(self, h_idx):
        est = self.estimates[h_idx]
        return {c: est[c] - self.truth[c] for c in COORDS}

    def raw_rows(self):
        rows = []
        for h_idx in sorted(self.estimates):
            est = self.estimates[h_idx]
            err = self.errors(h_idx)
            for i, rep in enumerate(est["rep"]):
                rows.append({
                    "rep": int(rep),
                    "T": float(est["T"][i]),
                    "alpha_plus_err": float(err["alpha_plus"][i]),
                    "alpha_minus_err": float(err["alpha_minus"][i]),
                    "mu1_err": float(err["mu1"][i]),
                    "mu2_err": float(err["mu2"][i]),
                })
        return rows

    def to_dict(self):
        def listify(d):
            return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}

        return {
            "kind": self.kind,
            "config": self.spec.to_dict(),
            "regime": {"case": self.regime.case, "hurst": self.regime.hurst,
                       "normaliser": self.regime.description},
            "truth": self.truth,
            "horizons": self.horizons,
            "lp_errors": self.lp_errors,
            "rms": self.rms,
            "bias": self.bias,
            "sd": self.sd,
            "slopes": {k: {"slope": v[0], "slope_se": v[1]} for k, v in self.slopes.items()},
            "normalized": listify(self.normalized),
            "normality": self.normality,
            "sigma_hat": self.sigma_hat,
            "runtime": self.runtime,
        }

    def write(self, out_dir):
        """Write ``report.json`` and ``raw_errors.csv`` into ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_json_default)
        with open(os.path.join(out_dir, "raw_errors.csv"), "w", newline="") as fh:
            fields = ["rep", "T", "alpha_plus_err", "alpha_minus_err", "mu1_err", "mu2_err"]
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.raw_rows():
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj)}")


def _runtime(start):
    return {
        "seconds": time.perf_counter() - start,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def run_consistency(spec: ExperimentSpec) -> McReport:
    """Empirical L^p errors of all estimators across horizons, with log-log slopes."""
    start = time.perf_counter()
    regime = spec.regime
    truth = _truth(spec.params)
    est = _collect(spec, range(len(spec.horizons)))
    rep = McReport("consistency", spec, regime, truth, list(spec.horizons), est)
    for c in COORDS:
        errs = [est[h][c] - truth[c] for h in range(len(spec.horizons))]
        rep.lp_errors[c] = {
            f"{p:g}": {
                "mean_abs_pow": [float(np.mean(np.abs(e) ** p)) for e in errs],
                "norm": [float(np.mean(np.abs(e) ** p) ** (1.0 / p)) for e in errs],
            }
            for p in spec.p_list
        }
        rep.rms[c] = [float(np.sqrt(np.mean(e ** 2))) for e in errs]
        rep.bias[c] = [float(np.mean(e)) for e in errs]
        rep.sd[c] = [float(np.std(e, ddof=1)) for e in errs]
        if len(spec.horizons) >= 2 and all(v > 0 for v in rep.rms[c]):
            rep.slopes[c] = fit_rate(spec.horizons, rep.rms[c])
        rate = regime.rate(spec.horizons[-1])
        rep.normalized[c] = rate * errs[-1]
    rep.runtime = _runtime(start)
    return rep


def _projection_directions(k=N_PROJECTIONS):
    rng = np.random.default_rng(_PROJECTION_SEED)
    v = rng.standard_normal((k, 2))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def run_clt(spec: ExperimentSpec) -> McReport:
    """Normality of ``l(T)(estimate - truth)`` at the largest horizon.

    Each coordinate gets a fitted-parameter KS test; the pairs
    ``(alpha_plus, alpha_minus)`` and ``(mu1, mu2)`` are additionally tested
    along 8 fixed unit directions after studentising each coordinate. The
    asymptotic covariance matrices are estimated by the sample covariance.
    """
    if spec.replications < MIN_CLT_REPLICATIONS:
        raise ParameterError(
            f"normality checks need at least {MIN_CLT_REPLICATIONS} replications, got {spec.replications}"
        )
    start = time.perf_counter()
    regime = spec.regime
    truth = _truth(spec.params)
    h_last = len(spec.horizons) - 1
    est = _collect(spec, [h_last])
    rep = McReport("clt", spec, regime, truth, [spec.horizons[h_last]], est)
    T = spec.horizons[h_last]
    rate = regime.rate(T)
    for c in COORDS:
        z = rate * (est[h_last][c] - truth[c])
        rep.normalized[c] = z
        stat, p = ks_normality(z)
        rep.normality[c] = {"statistic": stat, "p_value": p}
        rep.bias[c] = [float(np.mean(z) / rate)]
        rep.sd[c] = [float(np.std(z, ddof=1) / rate)]
    dirs = _projection_directions()
    for name, (a, b) in {"alpha": ("alpha_plus", "alpha_minus"), "mu": ("mu1", "mu2")}.items():
        Z = np.column_stack([rep.normalized[a], rep.normalized[b]])
        rep.sigma_hat[name] = np.cov(Z, rowvar=False).tolist()
        S = (Z - Z.mean(axis=0)) / Z.std(axis=0, ddof=1)
        proj = []
        for d in dirs:
            stat, p = ks_normality(S @ d)
            proj.append({"direction": d.tolist(), "statistic": stat, "p_value": p})
        rep.normality[f"{name}_projections"] = proj
    rep.runtime = _runtime(start)
    return rep


def fit_rate(horizons, errors):
    """OLS slope of ``log(error)`` on ``log(T)`` and its standard error.

    With exactly two points the slope is exact and the standard error is NaN.
    """
    T = np.asarray(horizons, dtype=float)
    e = np.asarray(errors, dtype=float)
    if T.shape != e.shape or T.size < 2:
        raise ValueError("need at least two (horizon, error) pairs")
    if np.any(e <= 0) or np.any(T <= 0):
        raise ValueError("horizons and errors must be positive for a log-log fit")
    if np.unique(T).size < 2:
        raise ValueError("horizons must not all coincide")
    lx, ly = np.log(T), np.log(e)
    xc = lx - lx.mean()
    sxx = float(np.sum(xc ** 2))
    slope = float(np.sum(xc * (ly - ly.mean())) / sxx)
    if T.size == 2:
        return slope, float("nan")
    resid = ly - ly.mean() - slope * xc
    se = math.sqrt(float(np.sum(resid ** 2)) / (T.size - 2) / sxx)
    return slope, se


def ks_normality(samples):
    """One-sample KS test against a normal law fitted by sample mean and sd.

    The p-value uses the asymptotic Kolmogorov distribution; because the mean
    and sd are estimated from the same sample it is conservative (a Lilliefors
    correction would make it smaller).
    """
    z = np.asarray(samples, dtype=float).ravel()
    if z.size < MIN_CLT_REPLICATIONS:
        raise ValueError(f"KS normality check needs at least {MIN_CLT_REPLICATIONS} samples, got {z.size}")
    sd = float(np.std(z, ddof=1))
    if not sd > 0 or not np.isfinite(sd):
        raise ValueError("degenerate sample: zero standard deviation")
    res = stats.kstest((z - z.mean()) / sd, "norm", method="asymp")
    return float(res.statistic), float(res.pvalue)


def discretization_gaps(model: CovarianceModel, params, T, fine_dt, coarse_factor, n_paths, seed=0):
    """First-moment estimates on one fine path and its every-``coarse_factor`` subsample.

    Returns ``(mu_fine, mu_coarse, bound)`` arrays over ``n_paths`` paths;
    ``bound`` is the pathwise Lipschitz bound
    ``max|alpha| / T sum_k int |Y_u - Y_{t_{k-1}}| du`` evaluated on the fine grid.
    """
    params = params if isinstance(params, OgpParams) else OgpParams(*params)
    n = int(round(T / fine_dt))
    if n % coarse_factor:
        raise ValueError("coarse_factor must divide the number of fine intervals")
    grid = TimeGrid(0.0, fine_dt, n + 1)
    fine, coarse, bound = [], [], []
    for i in range(n_paths):
        path = sample_stationary(model, grid, RngStream(seed, i))
        x = oscillate(path.y, params)
        fine.append(moment_estimates(ObservationSet(path.times, x)).mu1)
        sub = slice(None, None, coarse_factor)
        coarse.append(moment_estimates(ObservationSet(path.times[sub], x[sub])).mu1)
        anchor = np.repeat(path.y[:-1:coarse_factor], coarse_factor)
        bound.append(params.lipschitz * math.fsum(np.abs(path.y[:-1] - anchor) * fine_dt) / grid.horizon)
    return np.array(fine), np.array(coarse), np.array(bound)
