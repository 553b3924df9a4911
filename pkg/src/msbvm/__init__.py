"""Bayesian multiscale inference with Haar wavelets.

Multiscale norms and statistics, random histogram, Gaussian series and
log-density priors with their posteriors, multiscale and CDF credible bands,
and Monte Carlo experiments checking their frequentist behaviour.
"""

__version__ = "0.1.0"

from .bands import (
    CdfBand,
    CredibleBand,
    HolderConstraint,
    band_contains,
    band_diameter,
    cdf_band,
    credible_band,
    credible_radius,
    ks_statistic,
)
from .cdf import EmpiricalCDF, PiecewiseLinearCDF, sup_distance
from .config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config
from .haar import (
    CoefficientTree,
    DimensionError,
    PiecewiseConstantFn,
    analyze,
    holder_norm,
    synthesize,
)
from .harness import (
    ExperimentReport,
    run_bvm_check,
    run_clt_check,
    run_coverage,
    run_donsker_check,
    run_rate_check,
)
from .kolmogorov import kolmogorov_cdf, kolmogorov_quantile
from .multiscale import (
    WeightSequence,
    WhiteBridge,
    WhiteNoise,
    h_delta_norm,
    multiscale_norm,
    multiscale_statistic,
    project,
    sample_gaussian,
)
from .priors import (
    HistogramPrior,
    LogDensityPrior,
    PosteriorDraws,
    SeriesPriorWN,
    gaussian_wn_posterior,
    histogram_posterior,
    logdensity_posterior,
    posterior_mean,
    uniform_wn_posterior,
)
from .sampling import (
    CutoffRule,
    IidSample,
    WhiteNoiseObservation,
    cutoff,
    empirical_cdf,
    empirical_coefficients,
    observe_white_noise,
    sample_iid,
)

