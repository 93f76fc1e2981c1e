"""
Entropy-based concept networks and their logic explanations.

Train a network on concept activations, read one DNF formula per class off
its entropy layer, and score model and formulas with cross-validation.
"""

from entropy_lens.config import ExperimentConfig, TrainConfig, load_config
from entropy_lens.exceptions import (
    ConfigError, DatasetError, EntropyLensError, ExtractionError, FormulaError, MetricError, ShapeError,
    TrainingError, ValidationError,
)
from entropy_lens.experiments import crossval, grid_sweep, load_report, save_report
from entropy_lens.explainer import ConceptExplainer
from entropy_lens.logic import evaluate, parse, render, simplify
from entropy_lens.models import ConceptDataset, DnfFormula, EntropyNetwork, ExplanationReport
from entropy_lens.training import init_network, predict, train
from entropy_lens.utils.data_utils import load_csv, synth_parity, synth_toy

__version__ = '0.1.0'

__all__ = [
    'ConceptDataset',
    'ConceptExplainer',
    'DnfFormula',
    'EntropyNetwork',
    'ExperimentConfig',
    'ExplanationReport',
    'TrainConfig',
    'ConfigError',
    'DatasetError',
    'EntropyLensError',
    'ExtractionError',
    'FormulaError',
    'MetricError',
    'ShapeError',
    'TrainingError',
    'ValidationError',
    'crossval',
    'evaluate',
    'grid_sweep',
    'init_network',
    'load_config',
    'load_csv',
    'load_report',
    'parse',
    'predict',
    'render',
    'save_report',
    'simplify',
    'synth_parity',
    'synth_toy',
    'train',
]
