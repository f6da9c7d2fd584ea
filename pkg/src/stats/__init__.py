from .normal import std_normal_cdf, std_normal_pdf, std_normal_quantile
from .inequality import (
    InvalidGroupingError,
    gini_from_h,
    gini_from_sigma,
    grouped_gini,
    grouped_lorenz,
    lognormal_lorenz,
    sigma_from_gini,
)
from .order_stats import (
    GlsFit,
    GlsFitError,
    IllConditionedGridError,
    UnderdeterminedError,
    order_stat_covariance,
    static_gls_fit,
)
