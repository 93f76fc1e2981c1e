"""
Core explainer module containing the ConceptExplainer class.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from entropy_lens.config import TrainConfig
from entropy_lens.exceptions import ConfigError
from entropy_lens.layer import relevance_matrix
from entropy_lens.logic import DEFAULT_QM_VAR_LIMIT, explain_sample, extract_class_formula, render
from entropy_lens.metrics import ExtractionTimer, class_f1, class_fidelity, model_accuracy
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import DnfFormula, TruthTable
from entropy_lens.models.network import EntropyNetwork, TrainHistory
from entropy_lens.models.report import ClassExplanationResult, FoldResult
from entropy_lens.training import init_network, resolve_task_loss, train

logger = logging.getLogger(__name__)


class ConceptExplainer:
    """
    Trains an entropy network on concept data and explains it with one
    logic formula per class.

    This class runs the single-split pipeline: fit the network, extract and
    minimize class formulas, and score model and formulas on held-out data.
    """

    def __init__(self, config: Optional[TrainConfig] = None, qm_var_limit: int = DEFAULT_QM_VAR_LIMIT,
                 network: Optional[EntropyNetwork] = None):
        """
        Initialize the explainer.

        Args:
            config (TrainConfig, optional): hyperparameters, defaults to ``TrainConfig()``
            qm_var_limit (int): largest variable count handed to Quine-McCluskey
            network (EntropyNetwork, optional): an already trained network to explain
        """
        self.config = config or (network.config if network is not None else TrainConfig())
        self.qm_var_limit = qm_var_limit
        self.network = network
        self.history: Optional[TrainHistory] = None
        self.timer = ExtractionTimer()
        self.formulas: List[DnfFormula] = []
        self.tables: List[TruthTable] = []

    def _require_network(self) -> EntropyNetwork:
        if self.network is None:
            raise ConfigError("the explainer has no network; call fit() first")
        return self.network

    def fit(self, train_set: ConceptDataset, val_set: Optional[ConceptDataset] = None) -> 'ConceptExplainer':
        """
        Initialize and train a network.

        Args:
            train_set (ConceptDataset): training rows
            val_set (ConceptDataset, optional): early-stopping rows, defaults to the training rows

        Returns:
            ConceptExplainer: self
        """
        task_loss = resolve_task_loss(self.config, train_set)
        logger.info("training on %d samples (%d concepts, %d classes, %s loss, seed %d)",
                    train_set.n_samples, train_set.n_concepts, train_set.n_classes, task_loss, self.config.seed)
        self.timer.reset('train')
        with self.timer.measure('train'):
            network = init_network(train_set.concept_names, train_set.class_names, self.config, task_loss)
            self.network, self.history = train(network, train_set, val_set, self.config)
        return self

    def explain(self, train_set: ConceptDataset, val_set: Optional[ConceptDataset] = None) -> List[DnfFormula]:
        """
        Extract one simplified formula per class.

        Truth tables are built on `train_set`; minterm aggregation is scored on
        `val_set` (the training rows when omitted).

        Returns:
            list: DnfFormula per class, in class order
        """
        network = self._require_network()
        val_set = train_set if val_set is None else val_set
        self.formulas, self.tables = [], []
        self.timer.reset('extract')
        with self.timer.measure('extract'):
            for i in range(network.n_classes):
                formula, table = extract_class_formula(network, train_set, val_set, i,
                                                       self.qm_var_limit, self.config.epsilon)
                self.formulas.append(formula)
                self.tables.append(table)
        return self.formulas

    def score(self, test_set: ConceptDataset, fold: int = 0, seed: Optional[int] = None,
              n_train: int = 0, n_val: int = 0) -> FoldResult:
        """
        Model accuracy plus per-class F1, complexity and fidelity on `test_set`.

        Returns:
            FoldResult: metrics of this split
        """
        network = self._require_network()
        eps = self.config.epsilon
        per_class = []
        for formula, table in zip(self.formulas, self.tables):
            i = formula.class_index
            per_class.append(ClassExplanationResult(
                class_index=i,
                name=network.class_names[i],
                formula=formula,
                formula_text=render(formula, 'ascii'),
                f1=class_f1(formula, test_set, eps),
                fidelity=class_fidelity(formula, network, test_set, eps),
                contradictions=table.contradictions(),
            ))
        relevance = np.round(relevance_matrix(network), 6).tolist()
        return FoldResult(
            fold=fold,
            seed=self.config.seed if seed is None else seed,
            model_accuracy=model_accuracy(network, test_set),
            per_class=per_class,
            time_train_s=self.timer.train_s,
            time_extract_s=self.timer.extract_s,
            relevance=relevance,
            n_train=n_train,
            n_val=n_val,
            n_test=test_set.n_samples,
            best_epoch=self.history.best_epoch if self.history is not None else None,
        )

    def run(self, train_set: ConceptDataset, val_set: ConceptDataset, test_set: ConceptDataset,
            fold: int = 0) -> FoldResult:
        """Fit, explain and score one split."""
        self.fit(train_set, val_set)
        self.explain(train_set, val_set)
        result = self.score(test_set, fold=fold, n_train=train_set.n_samples, n_val=val_set.n_samples)
        logger.info("fold %d: model accuracy %.4f, explanation accuracy %.4f, fidelity %.4f",
                    fold, result.model_accuracy, result.explanation_accuracy, result.fidelity)
        return result

    def class_index(self, class_name: str) -> int:
        """
        Index of a class by name.

        Raises:
            ConfigError: listing the valid names
        """
        names = self._require_network().class_names
        if class_name not in names:
            raise ConfigError(f"unknown class '{class_name}'; valid names: {', '.join(names)}")
        return names.index(class_name)

    def explain_sample(self, concepts_row, class_name: str) -> Optional[DnfFormula]:
        """Minterm explanation of one observation for a named class (None if the class is not predicted)."""
        return explain_sample(self._require_network(), concepts_row, self.class_index(class_name),
                              self.config.epsilon)

    def formula_table(self, style: str = 'unicode') -> List[Tuple[str, str, int]]:
        """(class name, rendered formula, literal count) for every extracted class."""
        network = self._require_network()
        return [(network.class_names[f.class_index], render(f, style), f.n_literals) for f in self.formulas]
