"""mfboundary: boundary inference at H = 3/4 for mixed fractional models.

Exact Gaussian likelihood machinery for mixed fractional Brownian motion
(mfBm) and the mixed fractional Ornstein-Uhlenbeck process (mfOU), the
critical triangular score transformation at the Hurst boundary H = 3/4,
a feasible one-sided boundary score test, numerical verification of the
critical trace/LAN asymptotics, Monte Carlo harnesses, and an intraday
data pipeline.
"""

from .boundary import (
    CriticalCache,
    DecisionRecord,
    MfouEstimate,
    SigmaEstimate,
    TestResult,
    decide,
    efficient_statistic,
    feasible_statistic_mfbm,
    feasible_statistic_mfou,
    normal_cdf,
    restricted_mle_mfou,
    restricted_mle_sigma,
    z_quantile,
)
from .covariance import (
    CovarianceBundle,
    MfbmParams,
    MfouParams,
    QuadratureError,
    SamplingDesign,
    fgn_autocovariance,
    fgn_autocovariance_dH,
    mfbm_bundle,
    mfou_autocovariance,
    mfou_bundle,
    mfou_critical_rows,
)
from .gaussian import (
    NormalizedScores,
    ScoreVector,
    TraceMoments,
    log_likelihood,
    normalized_scores,
    score_trace_moments,
    score_vector,
)
from .sampling import (
    FgnSample,
    mfou_sampling_cholesky,
    rng_for,
    sample_fgn,
    sample_mfbm_increments,
    sample_mfou_path,
)
from .spectral import (
    CriticalConstants,
    GammaCrit,
    H_CRITICAL,
    c_coefficient,
    c_log_derivative,
    critical_constants,
    fgn_spectral_density,
    fgn_spectral_density_dH,
    gamma_crit,
    j_integrals,
    profiles,
    weight_profile,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "H_CRITICAL",
    # spectral
    "CriticalConstants",
    "GammaCrit",
    "c_coefficient",
    "c_log_derivative",
    "critical_constants",
    "fgn_spectral_density",
    "fgn_spectral_density_dH",
    "gamma_crit",
    "j_integrals",
    "profiles",
    "weight_profile",
    # covariance
    "CovarianceBundle",
    "MfbmParams",
    "MfouParams",
    "QuadratureError",
    "SamplingDesign",
    "fgn_autocovariance",
    "fgn_autocovariance_dH",
    "mfbm_bundle",
    "mfou_autocovariance",
    "mfou_bundle",
    "mfou_critical_rows",
    # gaussian
    "NormalizedScores",
    "ScoreVector",
    "TraceMoments",
    "log_likelihood",
    "normalized_scores",
    "score_trace_moments",
    "score_vector",
    # sampling
    "FgnSample",
    "mfou_sampling_cholesky",
    "rng_for",
    "sample_fgn",
    "sample_mfbm_increments",
    "sample_mfou_path",
    # boundary
    "CriticalCache",
    "DecisionRecord",
    "MfouEstimate",
    "SigmaEstimate",
    "TestResult",
    "decide",
    "efficient_statistic",
    "feasible_statistic_mfbm",
    "feasible_statistic_mfou",
    "normal_cdf",
    "restricted_mle_mfou",
    "restricted_mle_sigma",
    "z_quantile",
]
