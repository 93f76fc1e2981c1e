"""
Formula and truth-table models for entropy_lens.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Sequence, Tuple

import numpy as np

from entropy_lens.exceptions import FormulaError, ShapeError

Variable = Tuple[int, str]


@dataclass(frozen=True, order=True)
class Literal:
    """
    A possibly negated concept.

    Attributes:
        concept_index (int): column of the concept in the originating dataset
        concept_name (str): name of the concept
        negated (bool): True for the negative literal
    """
    concept_index: int
    concept_name: str
    negated: bool = False

    def holds(self, value: bool) -> bool:
        return bool(value) != self.negated


Term = Tuple[Literal, ...]


@dataclass(frozen=True)
class Minterm:
    """
    Conjunction over every kept concept of one truth table.

    Attributes:
        literals (Tuple[Literal, ...]): one literal per kept concept, in concept order
        support (int): positive-output table rows matching this minterm
    """
    literals: Term
    support: int = 1

    @property
    def signs(self) -> Tuple[int, ...]:
        """0 for a negated literal, 1 for a positive one; the tie-break key of support ranking."""
        return tuple(0 if lit.negated else 1 for lit in self.literals)


@dataclass(frozen=True)
class DnfFormula:
    """
    Class-level explanation in disjunctive normal form.

    An empty `terms` tuple is the constant False; a single empty term is the
    constant True.

    Attributes:
        terms (Tuple[Term, ...]): disjuncts, each a conjunction of literals
        variables (Tuple[Variable, ...]): (index, name) of the kept concepts the formula is evaluated on
        class_index (int): class the formula explains
        minimization_skipped (bool): too many variables for exact minimization
    """
    terms: Tuple[Term, ...]
    variables: Tuple[Variable, ...]
    class_index: int = 0
    minimization_skipped: bool = False

    def __post_init__(self):
        variables = tuple((int(i), str(n)) for i, n in self.variables)
        positions = {index: pos for pos, (index, _) in enumerate(variables)}
        if len(positions) != len(variables):
            raise FormulaError("duplicate variable in formula")
        unique = []
        for term in self.terms:
            literals = tuple(sorted(term, key=lambda lit: lit.concept_index))
            indices = [lit.concept_index for lit in literals]
            if len(set(indices)) != len(indices):
                raise FormulaError(f"term repeats a concept: {indices}")
            for lit in literals:
                if lit.concept_index not in positions:
                    raise FormulaError(f"literal '{lit.concept_name}' is not one of the formula variables")
            if literals not in unique:
                unique.append(literals)
        if () in unique:
            unique = [()]
        object.__setattr__(self, 'variables', variables)
        object.__setattr__(self, 'terms', tuple(unique))

    @classmethod
    def false(cls, variables: Sequence[Variable] = (), class_index: int = 0) -> 'DnfFormula':
        return cls((), tuple(variables), class_index)

    @classmethod
    def true(cls, variables: Sequence[Variable] = (), class_index: int = 0) -> 'DnfFormula':
        return cls(((),), tuple(variables), class_index)

    @property
    def is_false(self) -> bool:
        return not self.terms

    @property
    def is_true(self) -> bool:
        return any(len(term) == 0 for term in self.terms)

    @property
    def width(self) -> int:
        """Number of kept concepts a sample must provide."""
        return len(self.variables)

    @property
    def n_terms(self) -> int:
        """Minterm count; constants count zero."""
        return 0 if self.is_true else len(self.terms)

    @property
    def n_literals(self) -> int:
        """Literal occurrences summed over terms; constants count zero."""
        return sum(len(term) for term in self.terms)

    @property
    def concept_names(self) -> FrozenSet[str]:
        """Concepts that occur in at least one literal."""
        return frozenset(lit.concept_name for term in self.terms for lit in term)

    @property
    def positions(self) -> Dict[int, int]:
        """Concept index -> column position in a sample over `variables`."""
        return {index: pos for pos, (index, _) in enumerate(self.variables)}


@dataclass(frozen=True)
class TruthTable:
    """
    Binarized, masked samples of one class paired with the binarized model output.

    Attributes:
        class_index (int): class the table belongs to
        kept_concepts (Tuple[int, ...]): original indices of the kept concepts
        concept_names (Tuple[str, ...]): names of the kept concepts
        rows (np.ndarray): n x m boolean matrix
        outputs (np.ndarray): n boolean model outputs
        n_concepts (int): concept count before masking
    """
    class_index: int
    kept_concepts: Tuple[int, ...]
    concept_names: Tuple[str, ...]
    rows: np.ndarray
    outputs: np.ndarray
    n_concepts: int = field(default=0)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=bool).reshape(len(self.outputs), len(self.kept_concepts))
        outputs = np.asarray(self.outputs, dtype=bool)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'outputs', outputs)
        object.__setattr__(self, 'kept_concepts', tuple(int(j) for j in self.kept_concepts))
        object.__setattr__(self, 'concept_names', tuple(self.concept_names))
        if len(self.concept_names) != len(self.kept_concepts):
            raise ShapeError("one name per kept concept is required",
                             [(len(self.kept_concepts),), (len(self.concept_names),)])

    @property
    def width(self) -> int:
        return len(self.kept_concepts)

    @property
    def is_empty_mask(self) -> bool:
        return self.width == 0

    @property
    def is_full_width(self) -> bool:
        """No concept was dropped by the mask."""
        return self.width == self.n_concepts

    @property
    def variables(self) -> Tuple[Variable, ...]:
        return tuple(zip(self.kept_concepts, self.concept_names))

    def contradictions(self) -> int:
        """Number of distinct boolean tuples observed with both output values."""
        if len(self.outputs) == 0:
            return 0
        positive = {tuple(r) for r in self.rows[self.outputs]}
        negative = {tuple(r) for r in self.rows[~self.outputs]}
        return len(positive & negative)
