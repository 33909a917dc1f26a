"""Negative-energy vacuum-plus-two-particle states and the averaged-energy bound."""

from .profile import BumpSpec, RadialAngularProfile, build_profile
from .kernel import KernelC, derive_kernel, energy_quadratic, optimize_lambda, gamma_constant, default_gamma
from .energy import (
    StatePacket,
    EnergyQuadResult,
    KinematicReport,
    TheoremRow,
    TheoremReport,
    brackets,
    averaged_energy,
    mc_crosscheck,
    kinematic_sweep,
    theorem_bound,
    upper_bound_expression,
    verify_theorem,
)

__all__ = [
    'BumpSpec',
    'RadialAngularProfile',
    'build_profile',
    'KernelC',
    'derive_kernel',
    'energy_quadratic',
    'optimize_lambda',
    'gamma_constant',
    'default_gamma',
    'StatePacket',
    'EnergyQuadResult',
    'KinematicReport',
    'TheoremRow',
    'TheoremReport',
    'brackets',
    'averaged_energy',
    'mc_crosscheck',
    'kinematic_sweep',
    'theorem_bound',
    'upper_bound_expression',
    'verify_theorem',
]
