"""Numerical laboratory for contraction operators between lp coordinate spaces.

Estimates and certifies p->p operator norms, enumerates norming
directions, builds shared-tail seed operators, applies norm-preserving
block extensions that enlarge the norming span, and verifies the
quantitative laws this machinery rests on.
"""

from ._backend import backend_name
from .core import (
    FiniteOperator,
    NormEstimate,
    duality_map,
    is_norming,
    kan_gap,
    lp_norm,
    opnorm_estimate,
    opnorm_oracle,
    oracle_resolution,
    psi,
)
from .norming import (
    NormingSet,
    annihilator_basis,
    block_leakage_probe,
    disjoint_support_transfer_check,
    interval_property_check,
    norming_set,
    norming_span_dim,
    p4_symmetry_gap,
    segment_norming_check,
    sign_compatible,
)
from .special import (
    IntersectingFamily,
    SpecialOperator,
    is_special,
    pairwise_family,
    special_build,
)
from .modification import (
    ModificationParams,
    ModificationRecord,
    max_delta,
    maximal_modification,
    modify,
    norm_is_monotone_in_delta,
    select_eta,
)
from .construction import (
    ConstructionTrace,
    construct_full_norming_span,
    extend_report,
    trace_verify,
)
from .hilbert import TruncatedOperator, coisometry_approx, coisometry_defect, psd_sqrt
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "FiniteOperator", "NormEstimate", "NormingSet", "IntersectingFamily",
    "SpecialOperator", "ModificationParams", "ModificationRecord",
    "ConstructionTrace", "TruncatedOperator", "Tolerances", "DEFAULT",
    "backend_name", "lp_norm", "psi", "duality_map", "kan_gap",
    "opnorm_estimate", "opnorm_oracle", "oracle_resolution", "is_norming",
    "norming_set", "norming_span_dim", "annihilator_basis",
    "interval_property_check", "sign_compatible",
    "disjoint_support_transfer_check", "segment_norming_check",
    "p4_symmetry_gap", "block_leakage_probe", "pairwise_family",
    "special_build", "is_special", "modify", "max_delta", "select_eta",
    "maximal_modification", "norm_is_monotone_in_delta",
    "construct_full_norming_span", "trace_verify", "extend_report",
    "psd_sqrt", "coisometry_approx", "coisometry_defect",
]

__version__ = "0.1.0"
