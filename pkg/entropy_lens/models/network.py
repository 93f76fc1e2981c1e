"""
Parameter containers of the entropy network.

These classes only hold numbers; the arithmetic lives in
`entropy_lens.layer` and `entropy_lens.training`.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from entropy_lens.config import TrainConfig
from entropy_lens.exceptions import ConfigError, ShapeError

ARTIFACT_FORMAT = 'entropy-lens-network'
ARTIFACT_VERSION = 1


@dataclass
class EntropyHead:
    """
    First layer of one class branch.

    Attributes:
        class_index (int): index of the class this head serves
        weight (np.ndarray): hidden_units x k weight matrix
        bias (np.ndarray): hidden_units bias vector
        tau (float): softmax temperature
    """
    class_index: int
    weight: np.ndarray
    bias: np.ndarray
    tau: float

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError("head weight must be units x concepts with a matching bias",
                             [self.weight.shape, self.bias.shape])
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")

    @property
    def n_concepts(self) -> int:
        return self.weight.shape[1]


@dataclass
class DenseLayer:
    """A fully connected layer of a class branch; `activation` is 'identity' for the output unit."""
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError("layer weight must be out x in with a matching bias",
                             [self.weight.shape, self.bias.shape])


@dataclass(frozen=True)
class ConceptScores:
    """
    Concept relevances of one head.

    Attributes:
        gamma (np.ndarray): L1 norm of each concept's weight column
        alpha (np.ndarray): temperature softmax of gamma
        alpha_tilde (np.ndarray): alpha divided by its maximum
        log_alpha (np.ndarray): log of alpha, finite even where alpha underflows
    """
    gamma: np.ndarray
    alpha: np.ndarray
    alpha_tilde: np.ndarray
    log_alpha: np.ndarray


@dataclass(frozen=True)
class BooleanMask:
    """Concepts kept for explanation: ``mu[j] = alpha_tilde[j] >= epsilon``."""
    mu: np.ndarray
    epsilon: float

    @property
    def kept(self) -> Tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.mu))

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.mu))


@dataclass
class EntropyNetwork:
    """
    One independent branch per class: an entropy head followed by a trunk of
    dense layers ending in a single output unit.

    Attributes:
        heads (List[EntropyHead]): one head per class
        trunks (List[List[DenseLayer]]): per-class hidden layers plus the output unit
        config (TrainConfig): hyperparameters the network was built with
        concept_names (Tuple[str, ...]): input concept names
        class_names (Tuple[str, ...]): output class names
        task_loss (str): resolved task loss, 'softmax' or 'sigmoid'
    """
    heads: List[EntropyHead]
    trunks: List[List[DenseLayer]]
    config: TrainConfig
    concept_names: Tuple[str, ...]
    class_names: Tuple[str, ...]
    task_loss: str = 'softmax'

    def __post_init__(self):
        self.concept_names = tuple(self.concept_names)
        self.class_names = tuple(self.class_names)
        if len(self.heads) != len(self.trunks) or len(self.heads) != len(self.class_names):
            raise ShapeError("one head and one trunk per class are required",
                             [(len(self.heads),), (len(self.trunks),), (len(self.class_names),)])
        for head, trunk in zip(self.heads, self.trunks):
            if head.n_concepts != len(self.concept_names):
                raise ShapeError("head width does not match the concept count",
                                 [head.weight.shape, (len(self.concept_names),)])
            if not trunk or trunk[-1].weight.shape[0] != 1:
                raise ShapeError("each trunk must end in one scalar output unit",
                                 [trunk[-1].weight.shape if trunk else ()])

    @property
    def n_classes(self) -> int:
        return len(self.heads)

    @property
    def n_concepts(self) -> int:
        return len(self.concept_names)

    def parameters(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Yield (name, array) for every trainable array in a fixed order."""
        for i, (head, trunk) in enumerate(zip(self.heads, self.trunks)):
            yield f"class{i}.head.weight", head.weight
            yield f"class{i}.head.bias", head.bias
            for l, layer in enumerate(trunk):
                yield f"class{i}.layer{l}.weight", layer.weight
                yield f"class{i}.layer{l}.bias", layer.bias

    def copy(self) -> 'EntropyNetwork':
        return EntropyNetwork(
            heads=[EntropyHead(h.class_index, h.weight.copy(), h.bias.copy(), h.tau) for h in self.heads],
            trunks=[[DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in t] for t in self.trunks],
            config=self.config,
            concept_names=self.concept_names,
            class_names=self.class_names,
            task_loss=self.task_loss,
        )

    def state(self) -> Dict[str, np.ndarray]:
        """Snapshot of all parameters (copies)."""
        return {name: arr.copy() for name, arr in self.parameters()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrite parameters in place from a :meth:`state` snapshot."""
        for name, arr in self.parameters():
            arr[...] = state[name]

    def to_dict(self) -> Dict[str, Any]:
        """Versioned, JSON-ready description of shapes and weights."""
        config = asdict(self.config)
        config['hidden'] = list(config['hidden'])
        return {
            'format': ARTIFACT_FORMAT,
            'version': ARTIFACT_VERSION,
            'concept_names': list(self.concept_names),
            'class_names': list(self.class_names),
            'task_loss': self.task_loss,
            'config': config,
            'classes': [
                {
                    'head': {'tau': head.tau, 'weight': head.weight.tolist(), 'bias': head.bias.tolist()},
                    'layers': [{'activation': l.activation, 'weight': l.weight.tolist(),
                                'bias': l.bias.tolist()} for l in trunk],
                }
                for head, trunk in zip(self.heads, self.trunks)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EntropyNetwork':
        """Inverse of :meth:`to_dict`."""
        if data.get('format') != ARTIFACT_FORMAT:
            raise ConfigError("not an entropy network artifact")
        if data.get('version') != ARTIFACT_VERSION:
            raise ConfigError(f"unsupported artifact version {data.get('version')}")
        config = TrainConfig(**data['config'])
        heads, trunks = [], []
        for i, entry in enumerate(data['classes']):
            head = entry['head']
            heads.append(EntropyHead(i, np.array(head['weight']), np.array(head['bias']), head['tau']))
            trunks.append([DenseLayer(np.array(l['weight']), np.array(l['bias']), l['activation'])
                           for l in entry['layers']])
        return cls(heads, trunks, config, data['concept_names'], data['class_names'], data['task_loss'])


@dataclass(frozen=True)
class EpochRecord:
    """Losses and accuracies after one epoch."""
    epoch: int
    total_loss: float
    task_loss: float
    regularizer: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainHistory:
    """
    Per-epoch training log.

    Attributes:
        epochs (List[EpochRecord]): one record per completed epoch
        best_epoch (Optional[int]): epoch whose parameters were restored
    """
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None

    @property
    def best_val_accuracy(self) -> float:
        if self.best_epoch is None:
            return float('nan')
        return self.epochs[self.best_epoch].val_accuracy

    def running_best(self) -> List[float]:
        """Best validation accuracy seen up to each epoch."""
        best, out = -np.inf, []
        for record in self.epochs:
            best = max(best, record.val_accuracy)
            out.append(best)
        return out
