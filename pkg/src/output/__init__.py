"""Report writers: CSV and JSON adapters, the output manager and SVG plots."""

from .adapters import AdapterFactory, CsvAdapter, JsonAdapter, ReportAdapter, to_jsonable
from .manager import OutputManager
from .plots import PlotSeries, emit_plot

__all__ = [
    'AdapterFactory',
    'CsvAdapter',
    'JsonAdapter',
    'ReportAdapter',
    'to_jsonable',
    'OutputManager',
    'PlotSeries',
    'emit_plot',
]
