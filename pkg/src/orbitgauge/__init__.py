"""Orbit complexity and generalized entropy of one-dimensional maps."""

__version__ = "0.1.0"

from .dyadic import DomainError, PrecisionExhausted
from .systems import (
    SystemSpec,
    doubling,
    eval_map,
    logistic,
    logistic_inf,
    manneville,
    manneville_breakpoints,
    modulus,
    rotation,
    tent,
)
from .symbolic import (
    Ball,
    Cover,
    SymbolicString,
    binary_cover,
    dyadic_partition_cover,
    is_nice,
    join,
    lebesgue_number,
    min_subcover_count,
    partition_cover,
    refine_map,
    symbolic_orbit,
    uniform_cover,
)
from .complexity import (
    InfoProfile,
    ScalingFunction,
    complexity_indicator,
    cond_info_content,
    fit_growth_exponent,
    info_content,
    orbit_info_profile,
    sup_over_covers,
)
from .entropy import (
    cover_join_count,
    equicontinuity_probe,
    gen_entropy,
    net_set,
    sandwich_check,
    separated_set,
)
from .tracker import g_schedule, reconstruct_rotation, track, track_symbolic
