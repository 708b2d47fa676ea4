"""Abrupt-change detection by monitoring the largest singular value of a
sliding history matrix of measurement differences."""

from .bounds import (
    BoundParams,
    ThresholdPair,
    detectability_condition,
    detection_probability_lower_bound,
    lemma1_tail,
    lemma2_tail,
    min_attack_norm,
    min_window,
    tail_probability,
    threshold_ell,
    threshold_pair,
    threshold_u,
)
from .detector import (
    HistoryDetector,
    HistoryMatrix,
    Verdict,
    build_history_matrix,
    estimate_stream,
    post_attack_profile,
    sigma1_series,
)
from .errors import (
    InvalidInputError,
    NoSolutionError,
    SingularMatrixError,
    SvdAlarmError,
    TopologyError,
)
from .grid import (
    Attack,
    GridModel,
    MeasurementMatrix,
    build_h_matrix,
    default_grid,
    is_unobservable,
    load_grid,
    make_unobservable_attack,
    residual,
    wls_estimate,
)
from .numerics import largest_singular_value, spectral_norm, weighted_pinv

__version__ = "0.1.0"
