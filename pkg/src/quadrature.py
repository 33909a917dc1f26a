"""Composite Gauss-Legendre rules shared by the numerical packages.

Integrands are evaluated on whole node arrays at once. A callable may return
either one value per node or an array whose last axis runs over the nodes, in
which case every leading entry is integrated simultaneously.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Dict, Tuple, Union

import numpy as np

from src.utils.errors import QuadratureError, ErrorContext

logger = logging.getLogger(__name__)

ArrayFunc = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=64)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of an n_panels x order composite Gauss-Legendre rule.

    Args:
        a (float): Lower limit.
        b (float): Upper limit, b > a.
        n_panels (int): Number of equal panels.
        order (int): Nodes per panel.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Nodes in ascending order and their weights.
    """
    if not b > a:
        raise ValueError(f"Invalid interval [{a}, {b}]")
    if n_panels < 1 or order < 1:
        raise ValueError("n_panels and order must be positive")

    ref_nodes, ref_weights = _reference_rule(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def panel_rule_on_breaks(breaks: np.ndarray, order: int = 16, max_width: float = np.inf) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite rule whose panels never straddle the given break points.

    Intervals wider than max_width are split evenly.
    """
    breaks = np.asarray(breaks, dtype=float)
    widths = np.diff(breaks)
    keep = widths > 0
    left, widths = breaks[:-1][keep], widths[keep]
    if np.isfinite(max_width):
        pieces = np.maximum(1, np.ceil(widths / max_width)).astype(int)
    else:
        pieces = np.ones_like(widths, dtype=int)
    left = np.repeat(left, pieces)
    offsets = np.concatenate([np.arange(p) for p in pieces]) if len(pieces) else np.zeros(0)
    step = np.repeat(widths / pieces, pieces)
    lo = left + offsets * step

    ref_nodes, ref_weights = _reference_rule(order)
    half = 0.5 * step
    mid = lo + half
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


@dataclass
class PanelResult:
    """Outcome of an adaptive panel integration."""
    value: Union[float, np.ndarray]
    error: float
    n_panels: int
    trace: List[Dict[str, float]] = field(default_factory=list)


def integrate_panels(
    func: ArrayFunc,
    a: float,
    b: float,
    order: int = 16,
    n_panels: int = 4,
    rtol: float = 1e-12,
    atol: float = 1e-300,
    max_panels: int = 8192,
) -> PanelResult:
    """
    Integrate func over [a, b] doubling the panel count until two successive
    levels agree.

    Args:
        func (ArrayFunc): Vectorized integrand.
        a (float): Lower limit.
        b (float): Upper limit.
        order (int): Nodes per panel.
        n_panels (int): Initial panel count.
        rtol (float): Relative agreement required between levels.
        atol (float): Absolute agreement required between levels.
        max_panels (int): Refinement cap.

    Returns:
        PanelResult: Value of the finest level and the last level difference.

    Raises:
        QuadratureError: If the cap is reached before the levels agree.
    """
    trace: List[Dict[str, float]] = []
    previous = None
    panels = n_panels
    while panels <= max_panels:
        nodes, weights = gauss_legendre_panels(a, b, panels, order)
        values = np.asarray(func(nodes), dtype=float)
        current = values @ weights
        if not np.all(np.isfinite(current)):
            raise QuadratureError(
                f"Non-finite integral on [{a}, {b}] with {panels} panels",
                trace=trace,
                context=ErrorContext("quadrature", "integrate_panels", {'a': a, 'b': b}),
            )
        if previous is not None:
            diff = float(np.max(np.abs(current - previous)))
            scale = float(np.max(np.abs(current)))
            trace.append({'panels': panels, 'difference': diff, 'scale': scale})
            if diff <= atol + rtol * scale:
                logger.debug(f"Panel quadrature on [{a:.6g}, {b:.6g}] converged with {panels} panels "
                             f"(difference {diff:.3e})")
                return PanelResult(value=current if current.ndim else float(current),
                                   error=diff, n_panels=panels, trace=trace)
        previous = current
        panels *= 2

    raise QuadratureError(
        f"Panel quadrature on [{a}, {b}] did not converge within {max_panels} panels",
        trace=trace,
        context=ErrorContext("quadrature", "integrate_panels", {'rtol': rtol, 'atol': atol}),
    )
