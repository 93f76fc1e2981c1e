"""
Network assembly, loss, reverse-mode gradients and AdamW training.

Each class owns an independent branch: entropy head, hidden layers, scalar
output unit. Single-label data are trained with softmax cross-entropy over
the class outputs, multi-label data with per-class sigmoid cross-entropy.
The regularizer acts on the head relevances: the entropy of the concept
distribution (default) or the L1 norm of the relevances.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr, expit, log_softmax, softmax

from entropy_lens.config import TrainConfig
from entropy_lens.exceptions import ShapeError, TrainingError
from entropy_lens.layer import check_concepts, class_scores
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.network import (
    ConceptScores, DenseLayer, EntropyHead, EntropyNetwork, EpochRecord, TrainHistory,
)
from entropy_lens.utils.math_utils import affine, get_activation

logger = logging.getLogger(__name__)

IDENTITY = 'identity'


@dataclass(frozen=True)
class LossBreakdown:
    """Total loss and its parts; `regularizer` is the unweighted penalty."""
    total: float
    task: float
    regularizer: float


@dataclass
class _BranchCache:
    scores: ConceptScores
    gated: np.ndarray
    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, consumed by :func:`backward`."""
    concepts: np.ndarray
    logits: np.ndarray
    branches: List[_BranchCache]


def resolve_task_loss(config: TrainConfig, dataset: ConceptDataset) -> str:
    """'softmax' for one-label-per-row data and 'sigmoid' otherwise, unless forced by the config."""
    if config.task_loss != 'auto':
        return config.task_loss
    return 'softmax' if dataset.is_single_label else 'sigmoid'


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_network(concept_names: Sequence[str], class_names: Sequence[str], config: TrainConfig,
                 task_loss: str = 'softmax', seed: Optional[int] = None) -> EntropyNetwork:
    """
    Build a freshly initialized network.

    Weights and biases are drawn uniformly from ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``.

    Args:
        concept_names (Sequence[str]): input concepts
        class_names (Sequence[str]): output classes, one branch each
        config (TrainConfig): hyperparameters (hidden widths, temperature, activation)
        task_loss (str): 'softmax' or 'sigmoid'
        seed (int, optional): overrides ``config.seed``

    Returns:
        EntropyNetwork: the initialized network
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    k = len(concept_names)
    heads, trunks = [], []
    for i in range(len(class_names)):
        width = config.hidden[0]
        heads.append(EntropyHead(i, _uniform(rng, (width, k), k), _uniform(rng, (width,), k), config.tau))
        trunk = []
        for units in config.hidden[1:]:
            trunk.append(DenseLayer(_uniform(rng, (units, width), width), _uniform(rng, (units,), width),
                                    config.activation))
            width = units
        trunk.append(DenseLayer(_uniform(rng, (1, width), width), _uniform(rng, (1,), width), IDENTITY))
        trunks.append(trunk)
    return EntropyNetwork(heads, trunks, config, tuple(concept_names), tuple(class_names), task_loss)


def _activation(network: EntropyNetwork, name: str):
    return get_activation(name, network.config.leaky_slope)


def forward(network: EntropyNetwork, concepts) -> Tuple[np.ndarray, ForwardCache]:
    """
    Class logits for a batch of concept rows, with the cache for :func:`backward`.

    Returns:
        tuple: (n x r logits, cache)
    """
    C = np.atleast_2d(check_concepts(concepts, network.concept_names))
    if C.shape[1] != network.n_concepts:
        raise ShapeError("concept matrix does not match the network", [C.shape, (network.n_concepts,)])
    head_act, _ = _activation(network, network.config.activation)
    logits = np.empty((C.shape[0], network.n_classes))
    branches = []
    for i, (head, trunk) in enumerate(zip(network.heads, network.trunks)):
        scores = class_scores(network, i)
        gated = C * scores.alpha_tilde
        z = affine(head.weight, gated, head.bias)
        inputs, pre = [gated], [z]
        a = head_act(z)
        for layer in trunk:
            inputs.append(a)
            z = affine(layer.weight, a, layer.bias)
            pre.append(z)
            a = z if layer.activation == IDENTITY else _activation(network, layer.activation)[0](z)
        logits[:, i] = a[:, 0]
        branches.append(_BranchCache(scores, gated, inputs, pre))
    return logits, ForwardCache(C, logits, branches)


def predict(network: EntropyNetwork, concepts) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-class scores and predicted labels.

    Each class score is the sigmoid of the class log-odds. A sigmoid-trained
    branch output is its own log-odds. Softmax-trained outputs are only fixed
    up to a shared shift, so each one is taken against the log-sum-exp of the
    other classes, which makes the score the softmax probability of the
    class. The predicted label is the argmax over classes. Threshold the
    scores with the network's epsilon (:func:`binarize_outputs`) for boolean
    outputs.

    Returns:
        tuple: (n x r scores in [0, 1], n labels)
    """
    logits, _ = forward(network, concepts)
    scores = softmax(logits, axis=1) if network.task_loss == 'softmax' else expit(logits)
    return scores, np.argmax(scores, axis=1)


def binarize_outputs(scores, epsilon: float) -> np.ndarray:
    """Boolean class outputs ``score >= epsilon``."""
    return np.asarray(scores) >= epsilon


def entropy_of_distribution(alpha) -> float:
    """Natural-log entropy ``-sum(alpha * log(alpha))`` with ``0 log 0 = 0``."""
    return float(entr(np.asarray(alpha, dtype=np.float64)).sum())


def entropy_gradient(scores: ConceptScores, tau: float) -> np.ndarray:
    """Gradient of the entropy of ``softmax(gamma / tau)`` with respect to gamma."""
    alpha = scores.alpha
    h = entropy_of_distribution(alpha)
    return (alpha / tau) * (-scores.log_alpha - h)


def task_loss_value(logits, targets, kind: str) -> float:
    """Mean cross-entropy of the logits against boolean targets."""
    logits = np.asarray(logits, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if logits.shape != Y.shape:
        raise ShapeError("predictions and targets differ in shape", [logits.shape, Y.shape])
    if kind == 'softmax':
        return float(-(Y * log_softmax(logits, axis=1)).sum(axis=1).mean())
    return float((np.logaddexp(0.0, logits) - Y * logits).mean())


def _task_gradient(logits: np.ndarray, Y: np.ndarray, kind: str) -> np.ndarray:
    if kind == 'softmax':
        return (softmax(logits, axis=1) - Y) / logits.shape[0]
    return (expit(logits) - Y) / logits.size


def regularizer_value(scores: Sequence[ConceptScores], kind: str) -> float:
    """Unweighted penalty summed over class heads."""
    if kind == 'entropy':
        return float(sum(entropy_of_distribution(s.alpha) for s in scores))
    if kind == 'l1':
        return float(sum(s.gamma.sum() for s in scores))
    return 0.0


def loss_breakdown(predictions, targets, scores: Sequence[ConceptScores], config: TrainConfig,
                   task_loss: str = 'softmax') -> LossBreakdown:
    """Task loss, penalty and their weighted sum."""
    task = task_loss_value(predictions, targets, task_loss)
    reg = regularizer_value(scores, config.regularizer_kind)
    return LossBreakdown(total=task + config.lambda_ * reg, task=task, regularizer=reg)


def total_loss(predictions, targets, scores: Sequence[ConceptScores], config: TrainConfig,
               task_loss: str = 'softmax') -> float:
    """
    Cross-entropy plus ``lambda`` times the concept penalty.

    Args:
        predictions: n x r class logits
        targets: n x r boolean memberships
        scores (Sequence[ConceptScores]): one entry per class head
        config (TrainConfig): supplies lambda and the regularizer kind
        task_loss (str): 'softmax' or 'sigmoid'

    Returns:
        float: the total loss
    """
    if len(scores) != np.shape(predictions)[1]:
        raise ShapeError("one score set per class is required", [np.shape(predictions), (len(scores),)])
    return loss_breakdown(predictions, targets, scores, config, task_loss).total


def backward(network: EntropyNetwork, cache: ForwardCache, targets) -> Dict[str, np.ndarray]:
    """
    Analytic gradients of the total loss for every parameter.

    The head weights receive three contributions: the affine term, the
    gating term through ``gamma -> alpha -> alpha_tilde`` and the
    regularizer term through ``gamma``.

    Returns:
        dict: parameter name (as in :meth:`EntropyNetwork.parameters`) -> gradient
    """
    config = network.config
    Y = np.asarray(targets, dtype=np.float64)
    if Y.shape != cache.logits.shape:
        raise ShapeError("targets do not match the forward pass", [Y.shape, cache.logits.shape])
    dlogits = _task_gradient(cache.logits, Y, network.task_loss)
    head_grad = _activation(network, config.activation)[1]

    grads: Dict[str, np.ndarray] = {}
    for i, (head, trunk, branch) in enumerate(zip(network.heads, network.trunks, cache.branches)):
        d = dlogits[:, i:i + 1]
        for l in range(len(trunk) - 1, -1, -1):
            layer = trunk[l]
            z = branch.pre_activations[l + 1]
            dz = d if layer.activation == IDENTITY else d * _activation(network, layer.activation)[1](z)
            grads[f"class{i}.layer{l}.weight"] = dz.T @ branch.inputs[l + 1]
            grads[f"class{i}.layer{l}.bias"] = dz.sum(axis=0)
            d = dz @ layer.weight

        dz0 = d * head_grad(branch.pre_activations[0])
        dW = dz0.T @ branch.gated
        grads[f"class{i}.head.bias"] = dz0.sum(axis=0)

        scores = branch.scores
        dgamma = np.zeros_like(scores.gamma)
        if config.entropy_layer:
            d_gate = ((dz0 @ head.weight) * cache.concepts).sum(axis=0)
            g = d_gate * scores.alpha_tilde
            dgamma += g / head.tau
            dgamma[int(np.argmax(scores.gamma))] -= g.sum() / head.tau
        if config.regularizer_kind == 'entropy':
            dgamma += config.lambda_ * entropy_gradient(scores, head.tau)
        elif config.regularizer_kind == 'l1':
            dgamma += config.lambda_
        grads[f"class{i}.head.weight"] = dW + dgamma[None, :] * np.sign(head.weight)
    return grads


def loss_and_gradients(network: EntropyNetwork, concepts, targets) -> Tuple[LossBreakdown, Dict[str, np.ndarray]]:
    """Forward pass, loss and backward pass in one call."""
    logits, cache = forward(network, concepts)
    loss = loss_breakdown(logits, targets, [b.scores for b in cache.branches], network.config,
                          network.task_loss)
    return loss, backward(network, cache, targets)


def finite_difference_gradients(network: EntropyNetwork, concepts, targets,
                                step: float = 1e-5) -> Dict[str, np.ndarray]:
    """Central finite-difference estimate of every parameter gradient (slow, for checking)."""
    probe = network.copy()
    out = {}
    for name, arr in probe.parameters():
        grad = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            original = arr[idx]
            arr[idx] = original + step
            up, _ = loss_and_gradients(probe, concepts, targets)
            arr[idx] = original - step
            down, _ = loss_and_gradients(probe, concepts, targets)
            arr[idx] = original
            grad[idx] = (up.total - down.total) / (2.0 * step)
        out[name] = grad
    return out


class AdamW:
    """
    Adam with decoupled weight decay.

    The decay shrinks every parameter by ``lr * weight_decay`` before the
    bias-corrected Adam step; it never enters the moment estimates.
    """

    def __init__(self, lr: float = 1e-2, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    @classmethod
    def from_config(cls, config: TrainConfig) -> 'AdamW':
        return cls(config.learning_rate, config.beta1, config.beta2, config.adam_eps, config.weight_decay)

    def step(self, network: EntropyNetwork, grads: Dict[str, np.ndarray]) -> None:
        """Update the network parameters in place."""
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, param in network.parameters():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(param)
                self.v[name] = np.zeros_like(param)
            if self.weight_decay:
                param -= self.lr * self.weight_decay * param
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def logits_accuracy(logits, targets, task_loss: str, epsilon: float = 0.5) -> float:
    """
    Accuracy of class logits against boolean targets.

    Label accuracy (argmax against the true label) for softmax training;
    element-wise agreement of the thresholded class scores otherwise.
    """
    logits = np.asarray(logits)
    Y = np.asarray(targets, dtype=bool)
    if logits.shape[0] == 0:
        return 0.0
    if task_loss == 'softmax':
        return float(np.mean(np.argmax(logits, axis=1) == np.argmax(Y, axis=1)))
    return float(np.mean((expit(logits) >= epsilon) == Y))


def train(network: EntropyNetwork, train_set: ConceptDataset, val_set: Optional[ConceptDataset] = None,
          config: Optional[TrainConfig] = None) -> Tuple[EntropyNetwork, TrainHistory]:
    """
    Full-batch AdamW training with best-validation snapshots.

    Every epoch runs one gradient step on the whole training set, then
    measures train and validation accuracy of the updated parameters. The
    recorded loss is the one that produced the step. With early stopping the
    parameters of the earliest epoch with the highest validation accuracy are
    restored at the end and that epoch is recorded as `best_epoch`; without
    it the last parameters are kept and `best_epoch` stays None.

    Args:
        network (EntropyNetwork): initialized network, left untouched
        train_set (ConceptDataset): training rows
        val_set (ConceptDataset, optional): validation rows, defaults to the training rows
        config (TrainConfig, optional): defaults to ``network.config``

    Returns:
        tuple: (trained copy of the network, TrainHistory)

    Raises:
        TrainingError: when the loss becomes non-finite
    """
    config = config or network.config
    net = network.copy()
    net.config = config
    val_set = train_set if val_set is None else val_set
    for data in (train_set, val_set):
        if data.n_concepts != net.n_concepts or data.n_classes != net.n_classes:
            raise ShapeError("dataset does not match the network",
                             [data.concepts.shape, data.targets.shape, (net.n_concepts, net.n_classes)])

    history = TrainHistory()
    if config.max_epochs == 0:
        return net, history

    optimizer = AdamW.from_config(config)
    best_acc, best_epoch, best_state = -np.inf, None, None
    for epoch in range(config.max_epochs):
        loss, grads = loss_and_gradients(net, train_set.concepts, train_set.targets)
        if not (np.isfinite(loss.total) and all(np.all(np.isfinite(g)) for g in grads.values())):
            raise TrainingError("non-finite loss", epoch=epoch, total=loss.total, task=loss.task,
                                regularizer=loss.regularizer)
        optimizer.step(net, grads)

        train_logits, _ = forward(net, train_set.concepts)
        val_logits, _ = forward(net, val_set.concepts)
        record = EpochRecord(
            epoch=epoch,
            total_loss=loss.total,
            task_loss=loss.task,
            regularizer=loss.regularizer,
            train_accuracy=logits_accuracy(train_logits, train_set.targets, net.task_loss, config.epsilon),
            val_accuracy=logits_accuracy(val_logits, val_set.targets, net.task_loss, config.epsilon),
        )
        history.epochs.append(record)
        if record.val_accuracy > best_acc:
            best_acc, best_epoch = record.val_accuracy, epoch
            if config.early_stopping:
                best_state = net.state()
        if config.log_every and (epoch + 1) % config.log_every == 0:
            logger.debug("epoch %d: loss %.6g (task %.6g, penalty %.6g), train acc %.4f, val acc %.4f",
                         epoch, record.total_loss, record.task_loss, record.regularizer,
                         record.train_accuracy, record.val_accuracy)

    if best_state is not None:
        net.load_state(best_state)
        history.best_epoch = best_epoch
        logger.info("restored epoch %d with validation accuracy %.4f", history.best_epoch, best_acc)
    return net, history
