"""
Entropy-based concept layer.

Every class has its own head. The L1 norm of each concept's weight column
is its relevance; a temperature softmax over relevances gives a
distribution over concepts, and the distribution divided by its maximum
gates the input before the affine map. At explanation time the gate is
thresholded into a boolean mask that selects which concepts enter the
class truth table.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from entropy_lens.exceptions import ShapeError, ValidationError
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import TruthTable
from entropy_lens.models.network import BooleanMask, ConceptScores, EntropyHead, EntropyNetwork
from entropy_lens.utils.math_utils import affine, l1_column_norms, log_softmax_with_temperature

logger = logging.getLogger(__name__)


def compute_scores(head: EntropyHead) -> ConceptScores:
    """
    Relevance scores of a head.

    ``alpha_tilde`` is evaluated as ``exp(log_alpha - max(log_alpha))`` which
    equals ``alpha / max(alpha)`` and has a maximum of exactly 1.

    Args:
        head (EntropyHead): the head to score

    Returns:
        ConceptScores: gamma, alpha, alpha_tilde and log(alpha)
    """
    gamma = l1_column_norms(head.weight)
    log_alpha = log_softmax_with_temperature(gamma, head.tau)
    alpha = np.exp(log_alpha)
    alpha_tilde = np.exp(log_alpha - log_alpha.max())
    return ConceptScores(gamma=gamma, alpha=alpha, alpha_tilde=alpha_tilde, log_alpha=log_alpha)


def class_scores(network: EntropyNetwork, class_index: int) -> ConceptScores:
    """
    Scores of one class head as used by the forward pass.

    Without the entropy layer the gate is all ones, so every concept passes
    unchanged and is kept by the mask.
    """
    scores = compute_scores(network.heads[class_index])
    if network.config.entropy_layer:
        return scores
    return ConceptScores(gamma=scores.gamma, alpha=scores.alpha,
                         alpha_tilde=np.ones_like(scores.alpha_tilde), log_alpha=scores.log_alpha)


def check_concepts(c, concept_names: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Return `c` as float64, raising if any activation is outside [0, 1].

    Raises:
        ValidationError: naming the first offending concept
    """
    c = np.asarray(c, dtype=np.float64)
    bad = ~np.isfinite(c) | (c < 0.0) | (c > 1.0)
    if bad.any():
        position = tuple(int(i) for i in np.argwhere(bad)[0])
        j = position[-1]
        row = position[0] if c.ndim == 2 else None
        name = concept_names[j] if concept_names is not None else f"concept {j}"
        raise ValidationError(f"concept '{name}' has activation {c[position]!r} outside [0, 1]",
                              concept=name, row=row, column=j)
    return c


def gate_input(c, scores: ConceptScores, concept_names: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Element-wise product ``c * alpha_tilde``.

    `c` may be one sample or a batch with one sample per row.

    Raises:
        ShapeError: if the concept count differs from the scores
        ValidationError: if an activation is outside [0, 1]
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim not in (1, 2) or c.shape[-1] != scores.alpha_tilde.shape[0]:
        raise ShapeError("concept vector does not match the head", [c.shape, scores.alpha_tilde.shape])
    c = check_concepts(c, concept_names)
    return c * scores.alpha_tilde


def head_forward(c, head: EntropyHead) -> Tuple[np.ndarray, ConceptScores]:
    """
    Gated affine embedding of `c` by `head`.

    Returns:
        tuple: (pre-activation h, the scores used for gating)
    """
    scores = compute_scores(head)
    h = affine(head.weight, gate_input(c, scores), head.bias)
    return h, scores


def binarize_concepts(c, epsilon: float) -> np.ndarray:
    """Indicator ``c >= epsilon`` (inclusive at the threshold)."""
    return np.asarray(c, dtype=np.float64) >= epsilon


def compute_mask(scores: ConceptScores, epsilon: float) -> BooleanMask:
    """Keep the concepts whose gate reaches `epsilon`."""
    return BooleanMask(mu=scores.alpha_tilde >= epsilon, epsilon=epsilon)


def subselect(c_bar, mask: BooleanMask) -> np.ndarray:
    """
    Columns of `c_bar` where the mask is true, in original order.

    Works on one boolean vector or a boolean matrix with one sample per row.
    """
    c_bar = np.asarray(c_bar, dtype=bool)
    if c_bar.shape[-1] != mask.mu.shape[0]:
        raise ShapeError("boolean vector does not match the mask", [c_bar.shape, mask.mu.shape])
    return c_bar[..., mask.mu]


def relevance_matrix(network: EntropyNetwork) -> np.ndarray:
    """Classes x concepts matrix of gate values (one row of alpha_tilde per class)."""
    return np.vstack([class_scores(network, i).alpha_tilde for i in range(network.n_classes)])


def build_truth_table(dataset: ConceptDataset, network: EntropyNetwork, class_index: int,
                      epsilon: Optional[float] = None) -> TruthTable:
    """
    Stack the masked, binarized samples of `dataset` with the class output.

    Duplicate rows are kept. An all-false mask gives a table with zero
    columns and a logged warning.

    Args:
        dataset (ConceptDataset): samples to tabulate
        network (EntropyNetwork): trained network
        class_index (int): class whose head provides the mask and output
        epsilon (float, optional): threshold for concepts and outputs, defaults to the network's

    Returns:
        TruthTable: one row per sample
    """
    from entropy_lens.training import predict

    if dataset.n_concepts != network.n_concepts:
        raise ShapeError("dataset concept count does not match the network",
                         [dataset.concepts.shape, (network.n_concepts,)])
    if not 0 <= class_index < network.n_classes:
        raise ShapeError(f"class index {class_index} out of range", [(network.n_classes,)])
    eps = network.config.epsilon if epsilon is None else epsilon

    mask = compute_mask(class_scores(network, class_index), eps)
    kept = mask.kept
    if not kept:
        logger.warning("class '%s': no concept passes the gate threshold %.3g, truth table is empty",
                       network.class_names[class_index], eps)
    elif len(kept) == network.n_concepts:
        logger.warning("class '%s': all %d concepts retained by the mask",
                       network.class_names[class_index], len(kept))

    scores, _ = predict(network, dataset.concepts)
    rows = subselect(binarize_concepts(dataset.concepts, eps), mask)
    outputs = scores[:, class_index] >= eps
    return TruthTable(
        class_index=class_index,
        kept_concepts=kept,
        concept_names=tuple(network.concept_names[j] for j in kept),
        rows=rows,
        outputs=outputs,
        n_concepts=network.n_concepts,
    )
