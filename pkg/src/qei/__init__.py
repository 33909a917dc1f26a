"""Quantum energy inequality bounds and the QEI/nuclearity theorem checks."""

from .bounds import QeiBound, single_field_bound, counting_bound, tower_bound
from .theorems import (
    ScalingFit,
    PipelineReport,
    DomainVerdict,
    TowerStateBound,
    compute_scaling,
    qei_mass_sum_test,
    qei_to_nuclearity_pipeline,
    nuclearity_to_qei_domain,
    counting_envelope,
    tower_state_lower_bound,
)

__all__ = [
    'QeiBound',
    'single_field_bound',
    'counting_bound',
    'tower_bound',
    'ScalingFit',
    'PipelineReport',
    'DomainVerdict',
    'TowerStateBound',
    'compute_scaling',
    'qei_mass_sum_test',
    'qei_to_nuclearity_pipeline',
    'nuclearity_to_qei_domain',
    'counting_envelope',
    'tower_state_lower_bound',
]
