"""
Quantitative measures of model and explanation quality.

Rates are fractions in [0, 1]; reports render them as percentages.
"""

import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from sklearn.metrics import accuracy_score, f1_score

from entropy_lens.exceptions import MetricError
from entropy_lens.logic import formula_predictions
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import DnfFormula
from entropy_lens.models.network import EntropyNetwork
from entropy_lens.models.report import FoldResult
from entropy_lens.training import binarize_outputs, predict

logger = logging.getLogger(__name__)

# Fold-level metrics aggregated into a report: name -> FoldResult accessor
FOLD_METRICS = {
    'model_accuracy': lambda fold: fold.model_accuracy,
    'explanation_accuracy': lambda fold: fold.explanation_accuracy,
    'fidelity': lambda fold: fold.fidelity,
    'complexity': lambda fold: fold.complexity,
    'extraction_time': lambda fold: fold.extraction_time_seconds,
}


def _require_samples(dataset: ConceptDataset) -> None:
    if dataset.n_samples == 0:
        raise MetricError("test set has no samples")


def _require_formulas(formulas: Sequence[DnfFormula], dataset: ConceptDataset) -> None:
    if len(formulas) != dataset.n_classes:
        raise MetricError(f"expected one formula per class ({dataset.n_classes}), got {len(formulas)}")


def label_accuracy(predicted_labels, targets) -> float:
    """Fraction of rows whose predicted label is the row's true label."""
    targets = np.asarray(targets, dtype=bool)
    return float(accuracy_score(np.argmax(targets, axis=1), np.asarray(predicted_labels)))


def model_accuracy(network: EntropyNetwork, dataset: ConceptDataset) -> float:
    """
    Test accuracy of the network.

    Label accuracy on single-label data; element-wise agreement of the
    thresholded class outputs with the targets on multi-label data.

    Raises:
        MetricError: for an empty test set
    """
    _require_samples(dataset)
    scores, labels = predict(network, dataset.concepts)
    if dataset.is_single_label:
        return label_accuracy(labels, dataset.targets)
    outputs = binarize_outputs(scores, network.config.epsilon)
    return float(np.mean(outputs == dataset.targets))


def class_f1(formula: DnfFormula, dataset: ConceptDataset, epsilon: float = 0.5) -> float:
    """F1 of one class formula against the class memberships (zero when undefined)."""
    predicted = formula_predictions(formula, dataset.concepts, epsilon)
    return float(f1_score(dataset.targets[:, formula.class_index], predicted, zero_division=0))


def explanation_accuracy(formulas: Sequence[DnfFormula], dataset: ConceptDataset,
                         epsilon: float = 0.5) -> float:
    """
    Unweighted mean over classes of the formula F1 scores.

    Raises:
        MetricError: for an empty test set or a missing class formula
    """
    _require_samples(dataset)
    _require_formulas(formulas, dataset)
    return float(np.mean([class_f1(f, dataset, epsilon) for f in formulas]))


def complexity(formula: DnfFormula) -> int:
    """Literal occurrences of the DNF; 0 for the True and False constants."""
    return formula.n_literals


def complexity_minterms(formula: DnfFormula) -> int:
    """Number of minterms of the DNF; 0 for the constants."""
    return formula.n_terms


def class_fidelity(formula: DnfFormula, network: EntropyNetwork, dataset: ConceptDataset,
                   epsilon: float = 0.5) -> float:
    """Share of rows where the formula agrees with the thresholded class output."""
    scores, _ = predict(network, dataset.concepts)
    model = binarize_outputs(scores[:, formula.class_index], epsilon)
    return float(np.mean(formula_predictions(formula, dataset.concepts, epsilon) == model))


def fidelity(formulas: Sequence[DnfFormula], network: EntropyNetwork, dataset: ConceptDataset,
             epsilon: float = 0.5) -> float:
    """Mean over classes of :func:`class_fidelity`."""
    _require_samples(dataset)
    _require_formulas(formulas, dataset)
    return float(np.mean([class_fidelity(f, network, dataset, epsilon) for f in formulas]))


class ExtractionTimer:
    """
    Wall-clock stopwatch for the train and extract phases of a run.

    Usage::

        timer = ExtractionTimer()
        with timer.measure('train'):
            ...
        with timer.measure('extract'):
            ...
        timer.total
    """

    PHASES = ('train', 'extract')

    def __init__(self):
        self.seconds: Dict[str, float] = {phase: 0.0 for phase in self.PHASES}

    def reset(self, phase: Optional[str] = None) -> None:
        """Zero one phase, or every phase when `phase` is None."""
        for name in self.PHASES if phase is None else (phase,):
            if name not in self.seconds:
                raise MetricError(f"unknown phase '{name}'; expected one of {self.PHASES}")
            self.seconds[name] = 0.0

    @contextmanager
    def measure(self, phase: str) -> Iterator[None]:
        if phase not in self.seconds:
            raise MetricError(f"unknown phase '{phase}'; expected one of {self.PHASES}")
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[phase] += time.perf_counter() - start

    @property
    def train_s(self) -> float:
        return self.seconds['train']

    @property
    def extract_s(self) -> float:
        return self.seconds['extract']

    @property
    def total(self) -> float:
        return extraction_time(self.train_s, self.extract_s)


def extraction_time(train_s: float, extract_s: float = 0.0) -> float:
    """Seconds to train the model plus seconds to extract its formulas."""
    return float(train_s) + float(extract_s)


def consistency(formulas_by_fold: Sequence[Sequence[DnfFormula]]) -> float:
    """
    Cross-fold stability of the concepts used by each class formula.

    For a class, every concept that appears in the formula of any fold gets
    the share of folds whose formula uses it; the class value is the mean
    share. The result is the mean over classes. A class whose formulas never
    mention a concept contributes 0.

    Args:
        formulas_by_fold: one list of class formulas per fold

    Returns:
        float: consistency in [0, 1]

    Raises:
        MetricError: with fewer than two folds or ragged class lists
    """
    n_folds = len(formulas_by_fold)
    if n_folds < 2:
        raise MetricError("consistency needs at least two folds")
    n_classes = len(formulas_by_fold[0])
    if any(len(fold) != n_classes for fold in formulas_by_fold):
        raise MetricError("every fold must provide one formula per class")
    if n_classes == 0:
        return 0.0

    per_class = []
    for i in range(n_classes):
        sets = [fold[i].concept_names for fold in formulas_by_fold]
        union = frozenset().union(*sets)
        if not union:
            logger.warning("class %d: no concept appears in any fold, consistency 0", i)
            per_class.append(0.0)
            continue
        per_class.append(float(np.mean([sum(name in s for s in sets) / n_folds for name in sorted(union)])))
    return float(np.mean(per_class))


def mean_sem(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and standard error (sample standard deviation over sqrt(n)); SEM is 0 for one value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise MetricError("cannot aggregate an empty list")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(stats.sem(values))


def aggregate_folds(folds: List[FoldResult]) -> Dict[str, float]:
    """``<metric>_mean`` and ``<metric>_sem`` for every fold-level metric."""
    out: Dict[str, float] = {}
    for name, getter in FOLD_METRICS.items():
        mean, sem = mean_sem([getter(fold) for fold in folds])
        out[f"{name}_mean"] = mean
        out[f"{name}_sem"] = sem
    return out
