"""Local linear kernel regression with multiplicative bias correction."""

from .bandwidth import (
    BandwidthGrid,
    CvResult,
    loo_score_ll,
    loo_score_mbc,
    loo_scores_ll,
    loo_table_mbc,
    select_ll,
    select_mbc,
)
from .estimators import LocalLinearRegression, MultiplicativeBiasCorrectedRegression
from .exceptions import (
    AllDegenerateError,
    ClampEngagedWarning,
    DegenerateDesignError,
    EmptySpectrumError,
    GridTooCoarseError,
    SpectrumParseError,
    StudyFailedError,
)
from .mbc import MbcConfig, RatioSeries, default_clamp, mbc_fit, pilot_fit, ratio_series, resolve_offset
from .smoothing import (
    CiBand,
    FitCurve,
    SampleSet,
    WeightVector,
    difference_sigma,
    gaussian_kernel,
    local_linear_fit,
    local_linear_weights,
    moment_sums,
    pointwise_ci,
)

__version__ = "0.1.0"
