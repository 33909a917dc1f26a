"""Splitting-distance calculus under radial diffeomorphisms."""

from .diffeo import Ball, RadialDiffeo
from .calculus import (
    ShrinkResult,
    ScalingBound,
    covering_radius,
    derivative_kappa,
    shrink_construction,
    scaling_bound,
    distal_model_band,
    describe_band,
)

__all__ = [
    'Ball',
    'RadialDiffeo',
    'ShrinkResult',
    'ScalingBound',
    'covering_radius',
    'derivative_kappa',
    'shrink_construction',
    'scaling_bound',
    'distal_model_band',
    'describe_band',
]
