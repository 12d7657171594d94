"""Gaussian couplings, Brascamp-Lieb type constants and entropy bounds."""

from ._core import (
    Datum,
    Density1D,
    DimensionMismatch,
    Error,
    NoConvergence,
    NonSurjectiveMap,
    NotPositiveDefinite,
    SchemaError,
    SingularPushforward,
    UnstableTail,
    best_constant,
    certify,
    check_dimension_condition,
    check_scaling,
    compute_Dg,
    coupled_sum_entropy,
    delta2,
    dep_epi_bound,
    entropy_power,
    entropy_quadrature,
    evaluate_F,
    game_value_gaussian,
    geometric_mean,
    log_det,
    max_coupling,
    saddle_deviation_test,
)

__all__ = [name for name in dir() if not name.startswith("_")]
