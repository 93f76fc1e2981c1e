"""
Dataset input/output utilities for entropy_lens.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from entropy_lens.exceptions import ConfigError, DatasetError
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.network import EntropyNetwork

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TERCILE_SUFFIXES = ('_LOW', '_NORMAL', '_HIGH')
DIGIT_NAMES = ('zero', 'one', 'two', 'three', 'four', 'five', 'six', 'seven', 'eight', 'nine')

# x1..x4 followed by the targets y, not_y, z, not_z
TOY_ROWS = np.array([
    [0, 0, 0, 0, 0, 1, 0, 1],
    [0, 1, 0, 0, 1, 0, 0, 1],
    [1, 0, 0, 0, 1, 0, 0, 1],
    [1, 1, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 0, 0, 1, 0, 1],
    [0, 0, 0, 1, 0, 1, 1, 0],
    [0, 0, 1, 0, 0, 1, 1, 0],
    [0, 0, 1, 1, 0, 1, 1, 0],
])
TOY_CONCEPTS = ('x1', 'x2', 'x3', 'x4')
TOY_CLASSES = ('y', 'not_y', 'z', 'not_z')


def discretize(values, name: str) -> pd.DataFrame:
    """
    One-hot tercile encoding of a continuous feature.

    Values up to the 33.3rd percentile are LOW, up to the 66.7th NORMAL and
    the rest HIGH; a value equal to a percentile goes to the lower bin. A
    constant feature yields a single all-ones NORMAL column.

    Args:
        values: raw feature values
        name (str): feature name, used as the column prefix

    Returns:
        pd.DataFrame: ``<name>_LOW``, ``<name>_NORMAL``, ``<name>_HIGH`` columns of 0.0/1.0
    """
    values = pd.to_numeric(pd.Series(values, dtype='float64')).to_numpy()
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise DatasetError(f"feature '{name}' needs finite values to be discretized", column=name)
    if np.unique(values).size == 1:
        logger.warning("feature '%s' is constant, encoded as a single %s column", name, f"{name}_NORMAL")
        return pd.DataFrame({f"{name}_NORMAL": np.ones(values.size)})
    if np.unique(values).size < 3:
        logger.warning("feature '%s' has fewer than three distinct values", name)

    low, high = np.percentile(values, [100.0 / 3.0, 200.0 / 3.0])
    bins = np.where(values <= low, 0, np.where(values <= high, 1, 2))
    return pd.DataFrame({f"{name}{suffix}": (bins == b).astype(np.float64)
                         for b, suffix in enumerate(TERCILE_SUFFIXES)})


def load_csv(path: PathLike, target_columns: Sequence[str],
             discretize_columns: Sequence[str] = ()) -> ConceptDataset:
    """
    Read a concept dataset from a CSV file with a header row.

    Args:
        path: CSV file
        target_columns (Sequence[str]): columns holding 0/1 class memberships
        discretize_columns (Sequence[str]): continuous columns to tercile-encode

    Returns:
        ConceptDataset: concepts in header order followed by nothing else

    Raises:
        DatasetError: empty file, duplicate or missing columns, non-numeric cells, bad targets
        ValidationError: a concept value outside [0, 1]
    """
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DatasetError(f"{path}: no samples") from e
    except OSError as e:
        raise DatasetError(f"{path}: {e}") from e

    header = [str(h).strip() for h in raw.iloc[0]]
    seen = set()
    for name in header:
        if name in seen:
            raise DatasetError(f"{path}: duplicate column name '{name}'", column=name)
        seen.add(name)
    if raw.shape[0] < 2:
        raise DatasetError(f"{path}: no samples")
    if not target_columns:
        raise DatasetError(f"{path}: no target columns configured")
    for name in list(target_columns) + list(discretize_columns):
        if name not in seen:
            raise DatasetError(f"{path}: column '{name}' not found", column=name)

    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header
    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise DatasetError(f"{path}: non-numeric value '{frame.iat[row, col]}' at row {row}, "
                           f"column '{header[col]}'", row=row, column=header[col])

    targets = numeric[list(target_columns)].to_numpy()
    if not np.isin(targets, (0, 1)).all():
        row, col = (int(i) for i in np.argwhere(~np.isin(targets, (0, 1)))[0])
        raise DatasetError(f"{path}: target '{target_columns[col]}' must be 0 or 1 at row {row}",
                           row=row, column=target_columns[col])
    if np.any(targets.sum(axis=1) == 0):
        logger.warning("%s: some rows belong to no class", path)

    blocks: List[pd.DataFrame] = []
    for name in header:
        if name in target_columns:
            continue
        if name in discretize_columns:
            blocks.append(discretize(numeric[name], name))
        else:
            blocks.append(numeric[[name]].astype(np.float64))
    concepts = pd.concat(blocks, axis=1) if blocks else pd.DataFrame(index=numeric.index)

    dataset = ConceptDataset(concepts.to_numpy(), tuple(concepts.columns), targets.astype(bool),
                             tuple(target_columns), provenance=str(path))
    logger.info("loaded %s: %d samples, %d concepts, %d classes", path,
                dataset.n_samples, dataset.n_concepts, dataset.n_classes)
    return dataset


def write_csv(dataset: ConceptDataset, path: PathLike) -> None:
    """Write concepts then 0/1 targets with a header row; floats keep 17 significant digits."""
    dataset.to_frame().to_csv(path, index=False, float_format='%.17g', lineterminator='\n')


def synth_toy(n_pad: int = 100) -> ConceptDataset:
    """
    Eight-row XOR/OR toy problem.

    Concepts x1..x4 followed by `n_pad` all-zero padding concepts; targets
    y = x1 XOR x2, not_y, z = x3 OR x4, not_z.
    """
    if n_pad < 0:
        raise ConfigError(f"n_pad must be non-negative, got {n_pad}")
    concepts = np.hstack([TOY_ROWS[:, :4], np.zeros((TOY_ROWS.shape[0], n_pad))]).astype(np.float64)
    names = TOY_CONCEPTS + tuple(f"pad{j + 1}" for j in range(n_pad))
    return ConceptDataset(concepts, names, TOY_ROWS[:, 4:].astype(bool), TOY_CLASSES,
                          provenance=f"synth_toy(n_pad={n_pad})")


def synth_parity(n: int = 2000, noise: float = 0.0, seed: int = 0) -> ConceptDataset:
    """
    Digit parity problem on one-hot digit concepts.

    Each sample draws a digit uniformly from 0-9; its concepts are the one-hot
    indicator of the digit with every bit flipped independently with
    probability `noise`. Targets are even and odd.
    """
    if n < 10:
        raise ConfigError(f"parity data needs at least 10 samples, got {n}")
    if not 0.0 <= noise < 0.5:
        raise ConfigError(f"noise must lie in [0, 0.5), got {noise}")
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, 10, size=n)
    concepts = np.eye(10, dtype=bool)[digits]
    if noise > 0:
        concepts ^= rng.random((n, 10)) < noise
    odd = digits % 2 == 1
    return ConceptDataset(concepts.astype(np.float64), DIGIT_NAMES, np.column_stack([~odd, odd]),
                          ('even', 'odd'), provenance=f"synth_parity(n={n}, noise={noise}, seed={seed})")


def save_network(network: EntropyNetwork, path: PathLike) -> None:
    """Write a network artifact as JSON (floats round-trip exactly)."""
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(network.to_dict(), fh, indent=1)
        fh.write('\n')


def load_network(path: PathLike) -> EntropyNetwork:
    """Read a network artifact written by :func:`save_network`."""
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"model not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not a JSON document ({e})") from e
    return EntropyNetwork.from_dict(data)


def read_sample(text: str, n_concepts: Optional[int] = None) -> np.ndarray:
    """Parse a comma-separated row of concept activations."""
    try:
        row = np.array([float(v) for v in text.split(',') if v.strip()], dtype=np.float64)
    except ValueError as e:
        raise DatasetError(f"sample '{text}' is not a list of numbers") from e
    if n_concepts is not None and row.size != n_concepts:
        raise DatasetError(f"sample has {row.size} values, expected {n_concepts}")
    return row
