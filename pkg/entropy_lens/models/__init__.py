"""
Models package for entropy_lens.
"""

from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import DnfFormula, Literal, Minterm, TruthTable
from entropy_lens.models.network import (
    BooleanMask, ConceptScores, DenseLayer, EntropyHead, EntropyNetwork, EpochRecord, TrainHistory,
)
from entropy_lens.models.report import ClassExplanationResult, ExplanationReport, FoldResult

__all__ = [
    'ConceptDataset',
    'DnfFormula',
    'Literal',
    'Minterm',
    'TruthTable',
    'BooleanMask',
    'ConceptScores',
    'DenseLayer',
    'EntropyHead',
    'EntropyNetwork',
    'EpochRecord',
    'TrainHistory',
    'ClassExplanationResult',
    'ExplanationReport',
    'FoldResult',
]
