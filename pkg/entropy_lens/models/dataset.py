"""
Concept dataset model for entropy_lens.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from entropy_lens.exceptions import DatasetError, ShapeError, ValidationError


@dataclass(frozen=True)
class ConceptDataset:
    """
    Data class that holds concept activations and class memberships.

    Attributes:
        concepts (np.ndarray): n x k activations, every entry in [0, 1]
        concept_names (Tuple[str, ...]): one name per concept column
        targets (np.ndarray): n x r boolean class memberships
        class_names (Tuple[str, ...]): one name per target column
        provenance (str): where the data came from (file path or generator)
    """
    concepts: np.ndarray
    concept_names: Tuple[str, ...]
    targets: np.ndarray
    class_names: Tuple[str, ...]
    provenance: str = ''

    def __post_init__(self):
        concepts = np.asarray(self.concepts, dtype=np.float64)
        targets = np.asarray(self.targets).astype(bool)
        object.__setattr__(self, 'concepts', concepts)
        object.__setattr__(self, 'targets', targets)
        object.__setattr__(self, 'concept_names', tuple(self.concept_names))
        object.__setattr__(self, 'class_names', tuple(self.class_names))

        if concepts.ndim != 2 or targets.ndim != 2 or concepts.shape[0] != targets.shape[0]:
            raise ShapeError("concepts and targets must be matrices with one row per sample",
                             [concepts.shape, targets.shape])
        if len(self.concept_names) != concepts.shape[1]:
            raise ShapeError("one name per concept column is required",
                             [concepts.shape, (len(self.concept_names),)])
        if len(self.class_names) != targets.shape[1]:
            raise ShapeError("one name per target column is required",
                             [targets.shape, (len(self.class_names),)])
        for names, kind in ((self.concept_names, 'concept'), (self.class_names, 'class')):
            seen = set()
            for name in names:
                if name in seen:
                    raise DatasetError(f"duplicate {kind} name '{name}'", column=name)
                seen.add(name)
        bad = ~np.isfinite(concepts) | (concepts < 0.0) | (concepts > 1.0)
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise ValidationError(
                f"concept '{self.concept_names[col]}' has value {concepts[row, col]!r} outside [0, 1] "
                f"at row {row}", concept=self.concept_names[col], row=row, column=col)

    @property
    def n_samples(self) -> int:
        return self.concepts.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.concepts.shape[1]

    @property
    def n_classes(self) -> int:
        return self.targets.shape[1]

    @property
    def is_single_label(self) -> bool:
        """True when every row has exactly one true target."""
        return bool(np.all(self.targets.sum(axis=1) == 1))

    @property
    def labels(self) -> np.ndarray:
        """Index of the (first) true target of every row."""
        return np.argmax(self.targets, axis=1)

    @property
    def strata(self) -> np.ndarray:
        """One integer per row identifying its target pattern, for stratified splitting."""
        _, codes = np.unique(self.targets, axis=0, return_inverse=True)
        return np.asarray(codes).reshape(-1)

    def subset(self, indices: Sequence[int]) -> 'ConceptDataset':
        """Rows `indices` as a new dataset (order preserved, duplicates allowed)."""
        idx = np.asarray(indices, dtype=int)
        return ConceptDataset(self.concepts[idx], self.concept_names, self.targets[idx],
                              self.class_names, self.provenance)

    def to_frame(self) -> pd.DataFrame:
        """Concept columns followed by target columns (targets as 0/1)."""
        frame = pd.DataFrame(self.concepts, columns=list(self.concept_names))
        for j, name in enumerate(self.class_names):
            frame[name] = self.targets[:, j].astype(int)
        return frame
