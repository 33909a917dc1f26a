"""Static SVG plots of report series."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402

from src.utils.errors import ValidationError, OutputError, ErrorContext  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASHSALT = "qeilab"
PLOT_KINDS = ("line", "step", "scatter")


@dataclass(frozen=True)
class PlotSeries:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    kind: str = "line"


def emit_plot(series: Sequence[PlotSeries], path: Union[str, Path], xlabel: str, ylabel: str,
              title: Optional[str] = None, logy: bool = False) -> Path:
    """
    Draw the series into a static SVG.

    Output is reproducible: the SVG id salt is fixed and no date is embedded.
    Single-point series are drawn with a marker.

    Args:
        series: One or more series.
        path: Target file.
        xlabel: X axis label, including units.
        ylabel: Y axis label, including units.
        title: Optional title.
        logy: Logarithmic y axis.

    Raises:
        ValidationError: If there is nothing to draw.
        OutputError: If the file cannot be written.
    """
    if not series:
        raise ValidationError("emit_plot needs at least one series")
    fig = Figure(figsize=(6.4, 4.4))
    ax = fig.subplots()
    for item in series:
        x, y = np.asarray(item.x, dtype=float), np.asarray(item.y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValidationError(f"series {item.label!r} must be nonempty with matching x and y",
                                  ErrorContext("output", "emit_plot", {'label': item.label}))
        if item.kind not in PLOT_KINDS:
            raise ValidationError(f"unknown plot kind {item.kind!r}")
        if item.kind == "step":
            ax.step(x, y, where="post", label=item.label)
        elif item.kind == "scatter" or x.size == 1:
            ax.plot(x, y, linestyle="none", marker="o", label=item.label)
        else:
            ax.plot(x, y, label=item.label)
    if logy:
        ax.set_yscale("symlog")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)

    path = Path(path)
    try:
        with matplotlib.rc_context({'svg.hashsalt': SVG_HASHSALT}):
            fig.savefig(path, format="svg", metadata={'Date': None})
    except OSError as e:
        raise OutputError(f"Failed to write plot {path}: {e}",
                          ErrorContext("output", "emit_plot", {'path': str(path)})) from e
    logger.debug(f"Wrote plot {path}")
    return path
