"""
Dense vector/matrix helpers shared by the whole package.

Everything here is a pure function over float64 numpy arrays. Inputs are
never modified in place.
"""

from typing import Callable, Dict, Tuple

import numpy as np
from scipy.special import expit, log_softmax, softmax

from entropy_lens.exceptions import ConfigError, ShapeError

DEFAULT_LEAKY_SLOPE = 0.01


def as_real(values, name: str = "array") -> np.ndarray:
    """Return `values` as a float64 array, rejecting NaN and Inf."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries", [arr.shape])
    return arr


def affine(W, x, b) -> np.ndarray:
    """
    Compute ``W @ x + b``.

    `x` may be a single vector of length ``W.shape[1]`` or a batch with one
    sample per row, in which case one output row is returned per sample.

    Raises:
        ShapeError: if the shapes of W, x and b are incompatible
    """
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or b.ndim != 1 or x.ndim not in (1, 2):
        raise ShapeError("affine expects a matrix, a vector/batch and a bias vector",
                         [W.shape, x.shape, b.shape])
    if W.shape[1] != x.shape[-1] or W.shape[0] != b.shape[0]:
        raise ShapeError("affine dimension mismatch", [W.shape, x.shape, b.shape])
    return x @ W.T + b


def softmax_with_temperature(v, tau: float) -> np.ndarray:
    """
    Temperature softmax ``exp(v/tau) / sum(exp(v/tau))``.

    Computed with max-subtraction, so large inputs or small temperatures do
    not overflow.

    Raises:
        ConfigError: if tau is not strictly positive
    """
    if not tau > 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    return softmax(np.asarray(v, dtype=np.float64) / tau, axis=-1)


def log_softmax_with_temperature(v, tau: float) -> np.ndarray:
    """Logarithm of :func:`softmax_with_temperature`, finite even where the softmax underflows."""
    if not tau > 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    return log_softmax(np.asarray(v, dtype=np.float64) / tau, axis=-1)


def l1_column_norm(W, j: int) -> float:
    """
    Sum of absolute values of column `j` of `W`.

    Raises:
        ShapeError: if `j` is not a valid column index
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or not 0 <= j < W.shape[1]:
        raise ShapeError(f"column index {j} out of range", [W.shape])
    return float(np.abs(W[:, j]).sum())


def l1_column_norms(W) -> np.ndarray:
    """Vector of :func:`l1_column_norm` for every column."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ShapeError("expected a matrix", [W.shape])
    return np.abs(W).sum(axis=0)


# Activations and their derivatives

def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_grad(x) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) > 0).astype(np.float64)


def leaky_relu(x, slope: float = DEFAULT_LEAKY_SLOPE) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x, slope: float = DEFAULT_LEAKY_SLOPE) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 1.0, slope)


def sigmoid(x) -> np.ndarray:
    return expit(np.asarray(x, dtype=np.float64))


def sigmoid_grad(x) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 - s)


Activation = Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]

ACTIVATIONS: Dict[str, str] = {
    'relu': 'Rectified linear unit, max(0, x).',
    'leaky_relu': 'Leaky rectifier, x for x > 0 and slope * x otherwise.',
    'sigmoid': 'Logistic function 1 / (1 + exp(-x)).',
}


def get_activation(name: str, slope: float = DEFAULT_LEAKY_SLOPE) -> Activation:
    """
    Look up an activation and its derivative by name.

    Raises:
        ConfigError: for an unknown activation name
    """
    if name == 'relu':
        return relu, relu_grad
    if name == 'leaky_relu':
        return (lambda x: leaky_relu(x, slope)), (lambda x: leaky_relu_grad(x, slope))
    if name == 'sigmoid':
        return sigmoid, sigmoid_grad
    raise ConfigError(f"unknown activation '{name}'; expected one of {sorted(ACTIVATIONS)}")
