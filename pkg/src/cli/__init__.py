"""Command-line surface: the analysis runner and the argparse entry point."""

from .runner import AnalysisRunner, run
from .main import build_parser, load_config, main

__all__ = [
    'AnalysisRunner',
    'run',
    'build_parser',
    'load_config',
    'main',
]
