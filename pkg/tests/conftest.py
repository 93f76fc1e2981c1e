import numpy as np
import pytest

from entropy_lens.config import TrainConfig
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import DnfFormula, Literal, TruthTable
from entropy_lens.training import init_network
from entropy_lens.utils.data_utils import synth_toy

XOR_VARIABLES = ((0, 'x1'), (1, 'x2'))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy():
    return synth_toy(n_pad=0)


@pytest.fixture
def toy_padded():
    return synth_toy(n_pad=3)


@pytest.fixture
def small_config():
    return TrainConfig(hidden=(4,), max_epochs=20, learning_rate=1e-2, val_fraction=0.0, seed=3)


@pytest.fixture
def toy_network(toy, small_config):
    return init_network(toy.concept_names, toy.class_names, small_config, task_loss='sigmoid')


@pytest.fixture
def xor_formula():
    return DnfFormula(
        ((Literal(0, 'x1', True), Literal(1, 'x2')), (Literal(0, 'x1'), Literal(1, 'x2', True))),
        XOR_VARIABLES,
    )


@pytest.fixture
def xor_table():
    rows = np.array([[0, 1], [1, 0], [0, 0], [1, 1]], dtype=bool)
    return TruthTable(class_index=0, kept_concepts=(0, 1), concept_names=('x1', 'x2'), rows=rows,
                      outputs=np.array([1, 1, 0, 0], dtype=bool), n_concepts=2)


@pytest.fixture
def xor_validation():
    concepts = np.array([[0, 1], [1, 0], [0, 0], [1, 1]], dtype=float)
    return ConceptDataset(concepts, ('x1', 'x2'), np.array([[1], [1], [0], [0]]), ('y',))


@pytest.fixture
def all_assignments():
    """Every boolean vector of length n, one per row."""
    def build(n):
        return np.array([[(m >> i) & 1 for i in range(n)] for m in range(1 << n)], dtype=bool).reshape(-1, n)
    return build
