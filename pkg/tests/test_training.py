import numpy as np
import pytest
from scipy.special import softmax

from entropy_lens.config import TrainConfig
from entropy_lens.exceptions import ShapeError, TrainingError
from entropy_lens.layer import compute_scores
from entropy_lens.models.network import ConceptScores, EntropyHead, EntropyNetwork
from entropy_lens.training import (
    AdamW, binarize_outputs, entropy_gradient, entropy_of_distribution, finite_difference_gradients, forward,
    init_network, logits_accuracy, loss_and_gradients, predict, resolve_task_loss, task_loss_value, total_loss,
    train,
)
from entropy_lens.utils.data_utils import load_network, save_network, synth_parity


def _uniform_scores(k):
    alpha = np.full(k, 1.0 / k)
    return ConceptScores(gamma=np.ones(k), alpha=alpha, alpha_tilde=np.ones(k), log_alpha=np.log(alpha))


def _one_hot_scores(k):
    alpha = np.eye(k)[0]
    with np.errstate(divide='ignore'):
        log_alpha = np.log(alpha)
    return ConceptScores(gamma=np.eye(k)[0] * 50.0, alpha=alpha, alpha_tilde=alpha.copy(), log_alpha=log_alpha)


def _random_problem(rng, regularizer):
    """A small random network with inputs and targets, weights kept away from zero."""
    k = int(rng.integers(2, 11))
    r = int(rng.integers(1, 4))
    depth = int(rng.integers(1, 3))
    hidden = tuple(int(h) for h in rng.integers(1, 9, size=depth))
    task_loss = 'softmax' if r > 1 and rng.random() < 0.5 else 'sigmoid'
    config = TrainConfig(hidden=hidden, tau=float(rng.uniform(0.5, 2.0)), lambda_=0.1,
                         regularizer_kind=regularizer, activation='sigmoid')
    names = [f"c{j}" for j in range(k)]
    network = init_network(names, [f"k{i}" for i in range(r)], config, task_loss, seed=int(rng.integers(1 << 31)))
    for _, arr in network.parameters():
        # |w| >= 1e-3 so the finite-difference step never crosses the kink of |w|
        arr[...] = np.where(np.abs(arr) < 1e-3, 1e-3 * np.where(arr < 0, -1.0, 1.0), arr)
    n = 6
    concepts = rng.random((n, k))
    if task_loss == 'softmax':
        targets = np.eye(r, dtype=bool)[rng.integers(0, r, size=n)]
    else:
        targets = rng.random((n, r)) < 0.5
    return network, concepts, targets


class TestEntropy:
    def test_one_hot(self):
        assert entropy_of_distribution([0.0, 1.0, 0.0]) == 0.0

    def test_uniform(self):
        assert entropy_of_distribution(np.full(4, 0.25)) == pytest.approx(np.log(4), abs=1e-12)
        assert entropy_of_distribution([0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-12)

    def test_bounds(self, rng):
        for k in range(2, 10):
            alpha = rng.dirichlet(np.ones(k))
            assert 0.0 <= entropy_of_distribution(alpha) <= np.log(k) + 1e-12

    def test_gradient_matches_finite_difference(self, rng):
        tau, step = 0.8, 1e-6
        gamma = rng.random(5) * 3
        scores = compute_scores(EntropyHead(0, gamma[None, :], np.zeros(1), tau))
        numeric = np.zeros(5)
        for j in range(5):
            up, down = gamma.copy(), gamma.copy()
            up[j] += step
            down[j] -= step
            numeric[j] = (entropy_of_distribution(softmax(up / tau)) -
                          entropy_of_distribution(softmax(down / tau))) / (2 * step)
        np.testing.assert_allclose(entropy_gradient(scores, tau), numeric, rtol=1e-4, atol=1e-8)


class TestTotalLoss:
    def test_example(self):
        # logits chosen so that the cross-entropy of class 0 is exactly 1
        logits = np.array([[-np.log(np.e - 1.0), 0.0]])
        targets = np.array([[True, False]])
        assert task_loss_value(logits, targets, 'softmax') == pytest.approx(1.0, abs=1e-12)
        config = TrainConfig(lambda_=0.1)
        loss = total_loss(logits, targets, [_uniform_scores(2), _uniform_scores(2)], config)
        assert loss == pytest.approx(1.1386, abs=1e-4)

    def test_zero_lambda_is_cross_entropy(self, rng):
        logits = rng.normal(size=(5, 3))
        targets = np.eye(3, dtype=bool)[rng.integers(0, 3, size=5)]
        scores = [_uniform_scores(4)] * 3
        expected = task_loss_value(logits, targets, 'softmax')
        assert total_loss(logits, targets, scores, TrainConfig(lambda_=0.0)) == pytest.approx(expected, abs=1e-12)

    def test_one_hot_alpha_adds_nothing(self, rng):
        logits = rng.normal(size=(4, 2))
        targets = np.eye(2, dtype=bool)[[0, 1, 1, 0]]
        expected = task_loss_value(logits, targets, 'softmax')
        loss = total_loss(logits, targets, [_one_hot_scores(3)] * 2, TrainConfig(lambda_=5.0))
        assert loss == pytest.approx(expected, abs=1e-12)

    def test_l1_penalty(self):
        logits, targets = np.zeros((1, 2)), np.array([[True, False]])
        config = TrainConfig(lambda_=0.5, regularizer_kind='l1')
        loss = total_loss(logits, targets, [_uniform_scores(3)] * 2, config)
        assert loss == pytest.approx(np.log(2) + 0.5 * 6.0)

    def test_no_penalty(self):
        logits, targets = np.zeros((1, 2)), np.array([[True, False]])
        loss = total_loss(logits, targets, [_uniform_scores(3)] * 2, TrainConfig(lambda_=0.5, regularizer_kind='none'))
        assert loss == pytest.approx(np.log(2))

    def test_sigmoid_task_loss(self):
        assert task_loss_value(np.zeros((2, 2)), np.array([[1, 0], [0, 1]]), 'sigmoid') == pytest.approx(np.log(2))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            total_loss(np.zeros((2, 2)), np.zeros((2, 3)), [_uniform_scores(2)] * 2, TrainConfig())
        with pytest.raises(ShapeError):
            total_loss(np.zeros((2, 2)), np.zeros((2, 2)), [_uniform_scores(2)], TrainConfig())


class TestGradients:
    @pytest.mark.parametrize('regularizer', ['entropy', 'l1', 'none'])
    def test_against_finite_differences(self, regularizer):
        rng = np.random.default_rng({'entropy': 0, 'l1': 1, 'none': 2}[regularizer])
        for _ in range(20):
            network, concepts, targets = _random_problem(rng, regularizer)
            _, analytic = loss_and_gradients(network, concepts, targets)
            numeric = finite_difference_gradients(network, concepts, targets, step=1e-5)
            for name, _ in network.parameters():
                np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7, err_msg=name)

    def test_plain_linear_layer(self, rng):
        network, concepts, targets = _random_problem(rng, 'l1')
        network.config = TrainConfig(hidden=network.config.hidden, entropy_layer=False, regularizer_kind='l1',
                                     lambda_=0.1, activation=network.config.activation)
        _, analytic = loss_and_gradients(network, concepts, targets)
        numeric = finite_difference_gradients(network, concepts, targets)
        for name, _ in network.parameters():
            np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7, err_msg=name)

    def test_open_gate_reduces_to_plain_backprop(self, toy):
        config = TrainConfig(hidden=(3,), lambda_=0.0, seed=5)
        network = init_network(toy.concept_names, toy.class_names, config, 'sigmoid')
        for head in network.heads:
            head.weight[:] = np.tile(head.weight[:, :1], (1, toy.n_concepts))
        plain = network.copy()
        plain.config = TrainConfig(hidden=(3,), lambda_=0.0, seed=5, entropy_layer=False)
        _, gated = loss_and_gradients(network, toy.concepts, toy.targets)
        _, reference = loss_and_gradients(plain, toy.concepts, toy.targets)
        for name, _ in network.parameters():
            if name.endswith('head.weight'):
                continue
            np.testing.assert_allclose(gated[name], reference[name], atol=1e-12, err_msg=name)


class TestAdamW:
    def test_first_step_is_sign_step(self, toy_network):
        before = toy_network.state()
        grads = {name: np.full_like(arr, 2.0) for name, arr in toy_network.parameters()}
        AdamW(lr=0.01).step(toy_network, grads)
        for name, arr in toy_network.parameters():
            np.testing.assert_allclose(arr, before[name] - 0.01 * 2.0 / (2.0 + 1e-8), atol=1e-15)

    def test_decoupled_weight_decay(self, toy_network):
        before = toy_network.state()
        grads = {name: np.zeros_like(arr) for name, arr in toy_network.parameters()}
        AdamW(lr=0.1, weight_decay=0.5).step(toy_network, grads)
        for name, arr in toy_network.parameters():
            np.testing.assert_allclose(arr, before[name] * (1.0 - 0.1 * 0.5), atol=1e-15)


class TestPredict:
    def test_zero_logit_is_positive(self, toy_network, toy):
        for trunk in toy_network.trunks:
            trunk[-1].weight[:] = 0.0
            trunk[-1].bias[:] = 0.0
        scores, _ = predict(toy_network, toy.concepts)
        np.testing.assert_array_equal(scores, 0.5)
        assert binarize_outputs(scores, 0.5).all()

    def test_softmax_scores_are_class_probabilities(self):
        parity = synth_parity(20, seed=1)
        network = init_network(parity.concept_names, parity.class_names, TrainConfig(hidden=(2,)), 'softmax')
        # both outputs positive: only their difference is fixed by softmax training
        for trunk, bias in zip(network.trunks, [3.0, 1.0]):
            trunk[-1].weight[:] = 0.0
            trunk[-1].bias[:] = bias
        scores, labels = predict(network, parity.concepts)
        np.testing.assert_allclose(scores.sum(axis=1), 1.0)
        np.testing.assert_allclose(scores[:, 0], 1.0 / (1.0 + np.exp(-2.0)))
        np.testing.assert_array_equal(binarize_outputs(scores, 0.5), np.tile([True, False], (20, 1)))
        np.testing.assert_array_equal(labels, 0)

    def test_dead_gate_ignores_padding(self, toy_padded):
        config = TrainConfig(hidden=(3,), tau=0.01, seed=2)
        network = init_network(toy_padded.concept_names, toy_padded.class_names, config, 'sigmoid')
        for head in network.heads:
            head.weight[:, 4:] = 0.0
            head.weight[:, :4] = 10.0
        noisy = toy_padded.concepts.copy()
        noisy[:, 4:] = np.random.default_rng(0).random((toy_padded.n_samples, 3))
        np.testing.assert_array_equal(predict(network, noisy)[0], predict(network, toy_padded.concepts)[0])

    def test_resolve_task_loss(self, toy):
        assert resolve_task_loss(TrainConfig(), toy) == 'sigmoid'
        assert resolve_task_loss(TrainConfig(), synth_parity(20)) == 'softmax'
        assert resolve_task_loss(TrainConfig(task_loss='softmax'), toy) == 'softmax'


class TestTrain:
    def test_zero_epochs(self, toy_network, toy):
        config = TrainConfig(hidden=(4,), max_epochs=0, seed=3)
        trained, history = train(toy_network, toy, config=config)
        assert trained is not toy_network
        assert history.epochs == [] and history.best_epoch is None
        for name, arr in trained.parameters():
            np.testing.assert_array_equal(arr, toy_network.state()[name])

    def test_input_network_untouched(self, toy_network, toy):
        before = toy_network.state()
        train(toy_network, toy)
        for name, arr in toy_network.parameters():
            np.testing.assert_array_equal(arr, before[name])

    def test_deterministic(self, toy, small_config):
        runs = []
        for _ in range(2):
            network = init_network(toy.concept_names, toy.class_names, small_config, 'sigmoid')
            runs.append(train(network, toy, toy, small_config))
        (net_a, hist_a), (net_b, hist_b) = runs
        assert hist_a == hist_b
        for (name, a), (_, b) in zip(net_a.parameters(), net_b.parameters()):
            np.testing.assert_array_equal(a, b, err_msg=name)

    def test_early_stopping_restores_best(self, toy, toy_network, small_config):
        train_set, val_set = toy.subset(range(6)), toy.subset([6, 7, 0])
        net, history = train(toy_network, train_set, val_set, small_config)
        assert len(history.epochs) == small_config.max_epochs
        logits, _ = forward(net, val_set.concepts)
        restored = logits_accuracy(logits, val_set.targets, net.task_loss)
        assert restored == history.best_val_accuracy
        assert restored >= history.epochs[-1].val_accuracy
        best = history.running_best()
        assert all(a <= b for a, b in zip(best, best[1:]))
        assert history.best_epoch == min(e.epoch for e in history.epochs if e.val_accuracy == best[-1])

    def test_without_early_stopping_keeps_last(self, toy, toy_network):
        config = TrainConfig(hidden=(4,), max_epochs=5, early_stopping=False, seed=3)
        net, history = train(toy_network, toy, config=config)
        logits, _ = forward(net, toy.concepts)
        assert logits_accuracy(logits, toy.targets, net.task_loss) == history.epochs[-1].train_accuracy
        assert history.best_epoch is None

    def test_entropy_stays_in_bounds(self, toy, toy_network):
        _, history = train(toy_network, toy)
        for record in history.epochs:
            assert 0.0 <= record.regularizer <= toy.n_classes * np.log(toy.n_concepts) + 1e-9

    def test_non_finite_loss(self, toy, toy_network):
        toy_network.heads[0].weight[0, 0] = np.inf
        with pytest.raises(TrainingError) as err:
            with np.errstate(all='ignore'):
                train(toy_network, toy)
        assert err.value.epoch == 0

    def test_dataset_mismatch(self, toy_network, toy_padded):
        with pytest.raises(ShapeError):
            train(toy_network, toy_padded)


class TestArtifacts:
    def test_round_trip_is_exact(self, toy_network, tmp_path):
        path = tmp_path / 'model.json'
        save_network(toy_network, path)
        loaded = load_network(path)
        assert isinstance(loaded, EntropyNetwork)
        assert loaded.config == toy_network.config
        assert loaded.concept_names == toy_network.concept_names
        assert loaded.task_loss == 'sigmoid'
        for (name, a), (_, b) in zip(toy_network.parameters(), loaded.parameters()):
            np.testing.assert_array_equal(a, b, err_msg=name)
