"""Admissible averaging functions and their Fourier envelopes."""

from .mollifier import Mollifier, MollifierShape, SelfConvolution, make_mollifier, self_convolve
from .averaging import TestFunction, build_test_function, fourier_eval, rescale, sample_table
from .envelope import (
    ExponentialEnvelope,
    DecayClass,
    DecayFit,
    kappa_envelope,
    verify_envelope,
    classify_decay,
    transform_table,
)

__all__ = [
    'Mollifier',
    'MollifierShape',
    'SelfConvolution',
    'make_mollifier',
    'self_convolve',
    'TestFunction',
    'build_test_function',
    'fourier_eval',
    'rescale',
    'sample_table',
    'ExponentialEnvelope',
    'DecayClass',
    'DecayFit',
    'kappa_envelope',
    'verify_envelope',
    'classify_decay',
    'transform_table',
]
