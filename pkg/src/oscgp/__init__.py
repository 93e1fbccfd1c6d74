"""Simulation and moment-based inference for oscillating Gaussian processes."""

__version__ = "0.1.0"

from .core import (
    Branch,
    HermiteCoeffs,
    MomentPair,
    OgpParams,
    hermite_coeffs,
    invert_moments,
    ogp_covariance,
    ogp_product_moment,
    orthant_moment_series,
    oscillate,
    theoretical_moment,
)
from .covariance import (
    BorderCauchy,
    CovarianceModel,
    DecayRegime,
    Exponential,
    FgnLike,
    LampertiBifbm,
    TabulatedKernel,
    bifbm_cov,
    classify_decay,
    eval_cov,
    model_from_dict,
    variogram,
)
from .estimators import (
    EstimateReport,
    ObservationSet,
    alpha_estimates,
    estimate,
    lp_baseline,
    mesh_bound_h,
    moment_estimates,
    ss_moment_estimates,
)
from .harness import BifbmDriver, ExperimentSpec, McReport, fit_rate, ks_normality, run_clt, run_consistency
from .models import LejayPigatoEstimator, OscillatingMomentEstimator, Oscillator
from .simulation import (
    RngStream,
    SamplePath,
    TimeGrid,
    embedding_min_eigenvalue,
    sample_general,
    sample_stationary,
)
