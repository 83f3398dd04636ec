"""Set-similarity statistics: raw scores, background fits, Z/P/E values and EVD checks."""

from .curves import (
    FitCurve,
    FitDegenerateError,
    fit_curve,
    fit_linear_through_origin,
    fit_power,
    fit_power_offset,
    group_statistics,
)
from .evd import ChiSquareResult, Gumbel, chi_square_gof, fit_gumbel
from .fit import TS_GRID, fit_curves, fit_stat_model, select_ts, select_ts_by_gof
from .model import DEFAULT_FORMS, DEFAULT_TS, ModelSet, StatModel, published_model
from .sampling import (
    PROTOCOLS,
    BackgroundSample,
    PoolTooSmallError,
    SampledPoint,
    SamplingProtocol,
    SimilarityPool,
    sample_background,
    sample_background_subset1,
    sample_background_subset2,
    sample_background_subset3,
)
from .scoring import e_value, neg_log10, p_value, raw_score, z_score

__all__ = [
    "BackgroundSample",
    "ChiSquareResult",
    "DEFAULT_FORMS",
    "DEFAULT_TS",
    "FitCurve",
    "FitDegenerateError",
    "Gumbel",
    "ModelSet",
    "PROTOCOLS",
    "PoolTooSmallError",
    "SampledPoint",
    "SamplingProtocol",
    "SimilarityPool",
    "StatModel",
    "TS_GRID",
    "chi_square_gof",
    "e_value",
    "fit_curve",
    "fit_curves",
    "fit_gumbel",
    "fit_linear_through_origin",
    "fit_power",
    "fit_power_offset",
    "fit_stat_model",
    "group_statistics",
    "neg_log10",
    "p_value",
    "published_model",
    "raw_score",
    "sample_background",
    "sample_background_subset1",
    "sample_background_subset2",
    "sample_background_subset3",
    "select_ts",
    "select_ts_by_gof",
    "z_score",
]
