"""
Report model classes for entropy_lens.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from entropy_lens.models.formula import DnfFormula


@dataclass
class ClassExplanationResult:
    """
    Explanation of one class on one fold.

    Attributes:
        class_index (int): index of the class
        name (str): class name
        formula (DnfFormula): the extracted and simplified explanation
        formula_text (str): `formula` rendered in the ascii grammar
        f1 (float): F1 of the formula against the true class memberships of the test split
        fidelity (float): agreement of the formula with the binarized model output
        contradictions (int): boolean tuples seen with both outputs in the truth table
    """
    class_index: int
    name: str
    formula: DnfFormula
    formula_text: str
    f1: float
    fidelity: float
    contradictions: int = 0

    @property
    def complexity_literals(self) -> int:
        """Literal occurrences of the formula."""
        return self.formula.n_literals

    @property
    def complexity_minterms(self) -> int:
        """Number of minterms of the formula."""
        return self.formula.n_terms

    @property
    def concepts(self) -> List[str]:
        return sorted(self.formula.concept_names)


@dataclass
class FoldResult:
    """
    Train, extract and score results of one data split.

    Attributes:
        fold (int): fold number (0 for a single split)
        seed (int): seed the fold's initialization and validation split used
        model_accuracy (float): test accuracy of the network
        per_class (List[ClassExplanationResult]): one entry per class
        time_train_s (float): wall-clock seconds spent training
        time_extract_s (float): wall-clock seconds spent extracting formulas
        relevance (List[List[float]]): classes x concepts gate values
        n_train (int): training rows
        n_val (int): validation rows
        n_test (int): test rows
        best_epoch (Optional[int]): epoch restored by early stopping
    """
    fold: int
    seed: int
    model_accuracy: float
    per_class: List[ClassExplanationResult]
    time_train_s: float = 0.0
    time_extract_s: float = 0.0
    relevance: List[List[float]] = field(default_factory=list)
    n_train: int = 0
    n_val: int = 0
    n_test: int = 0
    best_epoch: Optional[int] = None

    @property
    def explanation_accuracy(self) -> float:
        """Unweighted mean of the per-class F1 scores."""
        if not self.per_class:
            return 0.0
        return float(np.mean([c.f1 for c in self.per_class]))

    @property
    def fidelity(self) -> float:
        if not self.per_class:
            return 0.0
        return float(np.mean([c.fidelity for c in self.per_class]))

    @property
    def complexity(self) -> float:
        """Mean literal count over classes."""
        if not self.per_class:
            return 0.0
        return float(np.mean([c.complexity_literals for c in self.per_class]))

    @property
    def extraction_time_seconds(self) -> float:
        """Training plus extraction seconds."""
        return self.time_train_s + self.time_extract_s


@dataclass
class ExplanationReport:
    """
    Cross-validated explanation report.

    Attributes:
        config_echo (Dict[str, Any]): effective configuration of the run
        folds (List[FoldResult]): per-fold results in fold order
        consistency (float): cross-fold concept stability in [0, 1]
        aggregate (Dict[str, float]): ``<metric>_mean`` and ``<metric>_sem`` entries
    """
    config_echo: Dict[str, Any]
    folds: List[FoldResult]
    consistency: float
    aggregate: Dict[str, float] = field(default_factory=dict)

    @property
    def class_names(self) -> List[str]:
        if not self.folds:
            return []
        return [c.name for c in self.folds[0].per_class]

    @property
    def model_accuracy(self) -> float:
        return self.aggregate.get('model_accuracy_mean', float('nan'))

    @property
    def explanation_accuracy(self) -> float:
        return self.aggregate.get('explanation_accuracy_mean', float('nan'))

    @property
    def extraction_time_seconds(self) -> float:
        return self.aggregate.get('extraction_time_mean', float('nan'))

    def formulas_by_class(self) -> Dict[str, List[str]]:
        """Class name -> ascii formula of every fold."""
        out: Dict[str, List[str]] = {name: [] for name in self.class_names}
        for fold in self.folds:
            for result in fold.per_class:
                out.setdefault(result.name, []).append(result.formula_text)
        return out
