"""Mass towers and their nuclearity, counting and thermodynamic criteria."""

from .spectrum import MassTower, TailKind, CountingIntegral, build_tower, integrate_against_counting
from .series import (
    Weight,
    SumStatus,
    SumVerdict,
    Tristate,
    DivergenceWitness,
    StretchedSumReport,
    weighted_mass_sum,
    stretched_sum_test,
)
from .criteria import (
    IdentityCheck,
    NuclearityVerdict,
    IndexBounds,
    TauberianBound,
    LocalNormalityReport,
    counting_integral_identity_check,
    classify_nuclearity,
    nuclearity_index_bounds,
    index_bounds_profile,
    tauberian_counting_bound,
    minimize_tauberian,
    tauberian_constants,
    local_normality_verdict,
    probe_grid,
)

__all__ = [
    'MassTower',
    'TailKind',
    'CountingIntegral',
    'build_tower',
    'integrate_against_counting',
    'Weight',
    'SumStatus',
    'SumVerdict',
    'Tristate',
    'DivergenceWitness',
    'StretchedSumReport',
    'weighted_mass_sum',
    'stretched_sum_test',
    'IdentityCheck',
    'NuclearityVerdict',
    'IndexBounds',
    'TauberianBound',
    'LocalNormalityReport',
    'counting_integral_identity_check',
    'classify_nuclearity',
    'nuclearity_index_bounds',
    'index_bounds_profile',
    'tauberian_counting_bound',
    'minimize_tauberian',
    'tauberian_constants',
    'local_normality_verdict',
    'probe_grid',
]
