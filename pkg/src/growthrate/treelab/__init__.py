"""Proof machinery on the Cayley tree of a free group: separators, forbidden and feasible words."""

from .feasible import (
    ForbiddenReport,
    InjectivityReport,
    ball_words,
    classify_forbidden,
    count_feasible,
    feasible_injectivity_check,
    feasible_words,
    guaranteed_bound,
    lifted_injectivity_check,
    m_threshold,
    rate_lower_bound_pipeline,
)
from .geometry import TreeMetric, end_germ, max_overlap, start_germ
from .separators import (
    KernelSpec,
    SearchExhausted,
    SeparatorSet,
    VerificationFailed,
    conjugate_pair_separators,
    find_separators,
    verify,
)
