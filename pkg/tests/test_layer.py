import logging

import numpy as np
import pytest

from entropy_lens.config import TrainConfig
from entropy_lens.exceptions import ShapeError, ValidationError
from entropy_lens.layer import (
    binarize_concepts, build_truth_table, class_scores, compute_mask, compute_scores, gate_input, head_forward,
    relevance_matrix, subselect,
)
from entropy_lens.models.network import BooleanMask, ConceptScores, EntropyHead
from entropy_lens.training import init_network, predict


def _scores(alpha_tilde):
    alpha_tilde = np.asarray(alpha_tilde, dtype=float)
    alpha = alpha_tilde / alpha_tilde.sum()
    return ConceptScores(gamma=alpha_tilde.copy(), alpha=alpha, alpha_tilde=alpha_tilde, log_alpha=np.log(alpha))


def _focused_network(dataset, kept, tau=0.05):
    """A network whose heads put all weight on the `kept` concepts."""
    config = TrainConfig(hidden=(3,), tau=tau, seed=0)
    network = init_network(dataset.concept_names, dataset.class_names, config, task_loss='sigmoid')
    for head in network.heads:
        head.weight[:] = 0.0
        head.weight[:, list(kept)] = 2.0
    return network


class TestComputeScores:
    def test_identical_columns(self):
        scores = compute_scores(EntropyHead(0, np.ones((3, 4)), np.zeros(3), tau=0.7))
        np.testing.assert_allclose(scores.alpha, [0.25] * 4, atol=1e-12)
        np.testing.assert_array_equal(scores.alpha_tilde, np.ones(4))

    def test_direct_evaluation(self):
        scores = compute_scores(EntropyHead(0, np.array([[2.0, -1.0, 0.0]]), np.zeros(1), tau=1.0))
        np.testing.assert_allclose(scores.gamma, [2.0, 1.0, 0.0])
        np.testing.assert_allclose(scores.alpha, [0.6652, 0.2447, 0.0900], atol=1e-3)
        np.testing.assert_allclose(scores.alpha_tilde, [1.0, 0.3679, 0.1353], atol=1e-3)

    def test_low_temperature_limit(self):
        scores = compute_scores(EntropyHead(0, np.array([[1.0, 0.0]]), np.zeros(1), tau=1e-3))
        np.testing.assert_allclose(scores.alpha, [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(scores.alpha_tilde, [1.0, 0.0], atol=1e-12)

    def test_invariants(self, rng):
        for _ in range(20):
            W = rng.normal(size=(5, 7))
            scores = compute_scores(EntropyHead(0, W, np.zeros(5), tau=rng.uniform(0.1, 5.0)))
            assert abs(scores.alpha.sum() - 1.0) <= 1e-12
            assert np.all(scores.alpha > 0)
            assert scores.alpha_tilde.max() == 1.0
            assert np.argmax(scores.alpha) == np.argmax(scores.gamma)
            np.testing.assert_allclose(scores.log_alpha, np.log(scores.alpha), atol=1e-12)

    def test_permutation_equivariance(self, rng):
        W = rng.normal(size=(4, 6))
        perm = rng.permutation(6)
        base = compute_scores(EntropyHead(0, W, np.zeros(4), 0.8))
        permuted = compute_scores(EntropyHead(0, W[:, perm], np.zeros(4), 0.8))
        np.testing.assert_allclose(permuted.alpha_tilde, base.alpha_tilde[perm], atol=1e-12)

    def test_scaling_sharpens(self, rng):
        W = rng.normal(size=(4, 6))
        base = compute_scores(EntropyHead(0, W, np.zeros(4), 1.0))
        scaled = compute_scores(EntropyHead(0, 3.0 * W, np.zeros(4), 1.0))
        np.testing.assert_allclose(scaled.gamma, 3.0 * base.gamma)
        assert scaled.alpha.max() >= base.alpha.max()


class TestGateInput:
    def test_one_hot_gate(self):
        c = np.array([0.2, 0.9, 0.4])
        np.testing.assert_array_equal(gate_input(c, _scores([0.0, 1.0, 0.0])), [0.0, 0.9, 0.0])

    def test_divide_by_max(self):
        alpha = np.array([0.8, 0.2])
        np.testing.assert_allclose(gate_input([0.5, 0.5], _scores(alpha / alpha.max())), [0.5, 0.125])

    def test_matches_loop_oracle(self, rng):
        c, gate = rng.random(8), rng.random(8)
        gate[3] = 1.0
        expected = [c[j] * gate[j] for j in range(8)]
        np.testing.assert_allclose(gate_input(c, _scores(gate)), expected)

    def test_out_of_range_names_concept(self):
        with pytest.raises(ValidationError) as err:
            gate_input([0.5, 1.5], _scores([1.0, 1.0]), ['wing', 'beak'])
        assert err.value.concept == 'beak'
        assert 'beak' in str(err.value)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            gate_input([0.5, 0.5, 0.5], _scores([1.0, 1.0]))


class TestHeadForward:
    def test_zero_input_gives_bias(self, rng):
        head = EntropyHead(0, rng.normal(size=(3, 4)), np.array([0.1, -0.2, 0.3]), 0.5)
        h, _ = head_forward(np.zeros(4), head)
        np.testing.assert_array_equal(h, head.bias)

    def test_identity_head(self):
        head = EntropyHead(0, np.eye(3), np.zeros(3), 0.7)
        h, scores = head_forward([0.1, 0.6, 0.9], head)
        np.testing.assert_array_equal(scores.alpha_tilde, np.ones(3))
        np.testing.assert_allclose(h, [0.1, 0.6, 0.9])

    def test_composition(self, rng):
        head = EntropyHead(0, rng.normal(size=(5, 4)), rng.normal(size=5), 0.9)
        c = rng.random(4)
        h, scores = head_forward(c, head)
        gated = c * scores.alpha_tilde
        np.testing.assert_allclose(h, head.weight @ gated + head.bias, atol=1e-12)


class TestBinarizeAndSubselect:
    def test_binarize(self):
        np.testing.assert_array_equal(binarize_concepts([0.1, 0.7], 0.5), [False, True])
        np.testing.assert_array_equal(binarize_concepts([0.2, 0.9], 0.5), [False, True])

    def test_threshold_is_inclusive(self):
        assert binarize_concepts([0.5], 0.5)[0]

    def test_subselect(self):
        mask = BooleanMask(np.array([1, 0, 0, 1], dtype=bool), 0.5)
        np.testing.assert_array_equal(subselect([1, 0, 1, 1], mask), [True, True])
        assert mask.kept == (0, 3)
        assert mask.popcount == 2

    def test_full_mask_is_identity(self, rng):
        bits = rng.random(6) > 0.5
        np.testing.assert_array_equal(subselect(bits, BooleanMask(np.ones(6, dtype=bool), 0.5)), bits)

    def test_empty_mask(self):
        assert subselect([1, 0], BooleanMask(np.zeros(2, dtype=bool), 0.5)).size == 0

    def test_matches_filter_oracle(self, rng):
        for _ in range(10):
            bits, mu = rng.random(9) > 0.5, rng.random(9) > 0.5
            expected = [b for b, keep in zip(bits, mu) if keep]
            np.testing.assert_array_equal(subselect(bits, BooleanMask(mu, 0.5)), expected)

    def test_mask_threshold(self):
        mask = compute_mask(_scores([1.0, 0.5, 0.49]), 0.5)
        np.testing.assert_array_equal(mask.mu, [True, True, False])


class TestRelevance:
    def test_shape_and_maximum(self, toy_network):
        relevance = relevance_matrix(toy_network)
        assert relevance.shape == (toy_network.n_classes, toy_network.n_concepts)
        np.testing.assert_array_equal(relevance.max(axis=1), np.ones(toy_network.n_classes))

    def test_plain_linear_layer_has_open_gate(self, toy):
        config = TrainConfig(hidden=(3,), entropy_layer=False)
        network = init_network(toy.concept_names, toy.class_names, config)
        np.testing.assert_array_equal(class_scores(network, 0).alpha_tilde, np.ones(toy.n_concepts))


class TestBuildTruthTable:
    def test_masked_columns(self, toy_padded):
        network = _focused_network(toy_padded, kept=(0, 1))
        table = build_truth_table(toy_padded, network, 0)
        assert table.kept_concepts == (0, 1)
        assert table.concept_names == ('x1', 'x2')
        assert table.rows.shape == (toy_padded.n_samples, 2)
        np.testing.assert_array_equal(table.rows, toy_padded.concepts[:, :2] >= 0.5)
        scores, _ = predict(network, toy_padded.concepts)
        np.testing.assert_array_equal(table.outputs, scores[:, 0] >= 0.5)

    def test_duplicates_are_kept(self, toy_padded):
        doubled = toy_padded.subset([1, 1])
        table = build_truth_table(doubled, _focused_network(toy_padded, kept=(0, 1)), 0)
        assert table.rows.shape == (2, 2)
        np.testing.assert_array_equal(table.rows[0], table.rows[1])

    def test_column_count_is_mask_popcount(self, toy_padded, small_config):
        network = init_network(toy_padded.concept_names, toy_padded.class_names, small_config, 'sigmoid')
        for i in range(network.n_classes):
            table = build_truth_table(toy_padded, network, i)
            mask = compute_mask(class_scores(network, i), 0.5)
            assert table.width == mask.popcount
            assert table.rows.shape[0] == toy_padded.n_samples

    def test_deterministic(self, toy_padded, small_config):
        network = init_network(toy_padded.concept_names, toy_padded.class_names, small_config, 'sigmoid')
        a = build_truth_table(toy_padded, network, 2)
        b = build_truth_table(toy_padded, network, 2)
        np.testing.assert_array_equal(a.rows, b.rows)
        np.testing.assert_array_equal(a.outputs, b.outputs)

    def test_full_width_is_reported(self, toy, caplog):
        network = init_network(toy.concept_names, toy.class_names, TrainConfig(hidden=(2,), entropy_layer=False))
        with caplog.at_level(logging.WARNING):
            table = build_truth_table(toy, network, 0)
        assert table.is_full_width
        assert 'all 4 concepts retained' in caplog.text

    def test_concept_count_mismatch(self, toy, toy_padded, small_config):
        network = init_network(toy.concept_names, toy.class_names, small_config)
        with pytest.raises(ShapeError):
            build_truth_table(toy_padded, network, 0)
