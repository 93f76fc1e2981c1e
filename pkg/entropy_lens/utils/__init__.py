"""
Utilities package for entropy_lens.
"""

from entropy_lens.utils.data_utils import (
    discretize, load_csv, load_network, save_network, synth_parity, synth_toy, write_csv,
)
from entropy_lens.utils.display_utils import grid_markdown, print_report, relevance_table, report_markdown

__all__ = [
    'discretize',
    'load_csv',
    'load_network',
    'save_network',
    'synth_parity',
    'synth_toy',
    'write_csv',
    'grid_markdown',
    'print_report',
    'relevance_table',
    'report_markdown',
]
