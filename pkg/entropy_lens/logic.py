"""
Logic explanations extracted from a trained entropy network.

Positive rows of a class truth table become minterms, minterms are ranked by
support and OR-ed together while the class F1 on validation data improves,
and the resulting DNF is minimized with Quine-McCluskey.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pyparsing as pp
from sklearn.metrics import f1_score

from entropy_lens.exceptions import ExtractionError, FormulaError
from entropy_lens.layer import binarize_concepts, build_truth_table, class_scores, compute_mask
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.formula import DnfFormula, Literal, Minterm, Term, TruthTable, Variable
from entropy_lens.models.network import EntropyNetwork
from entropy_lens.training import predict

logger = logging.getLogger(__name__)

DEFAULT_QM_VAR_LIMIT = 16

# A cube assigns 0, 1 or DASH to every variable of the minimization
Cube = Tuple[int, ...]
DASH = 2

SYMBOLS = {
    'unicode': {'not': '¬', 'and': ' ∧ ', 'or': ' ∨ '},
    'ascii': {'not': '~', 'and': ' & ', 'or': ' | '},
    'dnf-canonical': {'not': 'NOT ', 'and': ' AND ', 'or': ' OR '},
}


# Minterms and aggregation

def extract_minterm(row, names: Sequence[str], indices: Optional[Sequence[int]] = None,
                    support: int = 1) -> Minterm:
    """
    Conjunction of every kept concept, negated where the row is false.

    Args:
        row: boolean values of the kept concepts
        names (Sequence[str]): kept concept names
        indices (Sequence[int], optional): original concept indices, defaults to 0..m-1
        support (int): number of positive rows carrying this pattern

    Raises:
        ExtractionError: for a zero-width row
    """
    row = np.asarray(row, dtype=bool).reshape(-1)
    if row.size == 0:
        raise ExtractionError("no concepts retained")
    if len(names) != row.size:
        raise ExtractionError(f"row has {row.size} values but {len(names)} concept names were given")
    indices = range(row.size) if indices is None else indices
    literals = tuple(Literal(int(j), name, not bool(value)) for j, name, value in zip(indices, names, row))
    return Minterm(literals, support)


def ranked_minterms(table: TruthTable) -> List[Minterm]:
    """
    Distinct positive rows of `table` as minterms, most supported first.

    Ties are broken by the literal signs (negated before positive, left to
    right). A pattern also observed with a negative output still counts.
    """
    if table.is_empty_mask:
        raise ExtractionError("no concepts retained")
    support = Counter(tuple(bool(v) for v in row) for row in table.rows[table.outputs])
    minterms = [extract_minterm(pattern, table.concept_names, table.kept_concepts, count)
                for pattern, count in support.items()]
    return sorted(minterms, key=lambda m: (-m.support, m.signs))


def _matches(rows: np.ndarray, minterm: Minterm) -> np.ndarray:
    signs = np.array(minterm.signs, dtype=bool)
    return np.all(rows == signs, axis=1)


def aggregate_class_formula(table: TruthTable, validation: ConceptDataset,
                            epsilon: float = 0.5) -> DnfFormula:
    """
    OR together support-ranked minterms while the class F1 improves.

    The best-supported minterm is always taken. Each following minterm is
    added only if the F1 of the disjunction against the true class
    memberships of `validation` strictly increases; aggregation stops at the
    first minterm that does not help.

    Args:
        table (TruthTable): truth table of the class
        validation (ConceptDataset): data scoring the candidate disjunctions
        epsilon (float): concept binarization threshold

    Returns:
        DnfFormula: unsimplified class formula, False when no row is positive
    """
    variables = table.variables
    if table.is_empty_mask:
        logger.warning("class %d: empty concept mask, explanation is False", table.class_index)
        return DnfFormula.false(variables, table.class_index)
    n_contradictions = table.contradictions()
    if n_contradictions:
        logger.warning("class %d: %d boolean tuples observed with both outputs",
                       table.class_index, n_contradictions)

    candidates = ranked_minterms(table)
    if not candidates:
        return DnfFormula.false(variables, table.class_index)
    if validation.n_samples == 0:
        raise ExtractionError("validation data has no samples")

    rows = binarize_concepts(validation.concepts, epsilon)[:, list(table.kept_concepts)]
    truth = validation.targets[:, table.class_index]

    chosen = [candidates[0]]
    predicted = _matches(rows, candidates[0])
    best = f1_score(truth, predicted, zero_division=0)
    for minterm in candidates[1:]:
        trial = predicted | _matches(rows, minterm)
        score = f1_score(truth, trial, zero_division=0)
        if score <= best:
            break
        chosen.append(minterm)
        predicted, best = trial, score
    logger.debug("class %d: kept %d of %d minterms, validation F1 %.4f",
                 table.class_index, len(chosen), len(candidates), best)
    return DnfFormula(tuple(m.literals for m in chosen), variables, table.class_index)


# Quine-McCluskey

def _to_cube(term: Term, position: Dict[int, int], n: int) -> Cube:
    cube = [DASH] * n
    for lit in term:
        cube[position[lit.concept_index]] = 0 if lit.negated else 1
    return tuple(cube)


def _expand(cube: Cube) -> Iterable[int]:
    """Integers (bit i = variable i) of every assignment inside the cube."""
    base = sum(1 << i for i, v in enumerate(cube) if v == 1)
    free = [i for i, v in enumerate(cube) if v == DASH]
    for mask in range(1 << len(free)):
        yield base | sum(1 << free[b] for b in range(len(free)) if mask >> b & 1)


def _covers(cube: Cube, assignment: int) -> bool:
    return all(v == DASH or v == (assignment >> i & 1) for i, v in enumerate(cube))


def _contains(outer: Cube, inner: Cube) -> bool:
    return all(o == DASH or o == i for o, i in zip(outer, inner))


def _n_literals(cube: Cube) -> int:
    return sum(1 for v in cube if v != DASH)


def prime_implicants(n: int, on_set: Set[int]) -> List[Cube]:
    """Prime implicants of the function true exactly on `on_set` (no don't-cares)."""
    level = {tuple(m >> i & 1 for i in range(n)) for m in on_set}
    primes: Set[Cube] = set()
    while level:
        groups = defaultdict(list)
        for cube in level:
            groups[sum(1 for v in cube if v == 1)].append(cube)
        used, next_level = set(), set()
        for ones in sorted(groups):
            for a in groups[ones]:
                for b in groups.get(ones + 1, ()):
                    diff = [i for i, (x, y) in enumerate(zip(a, b)) if x != y]
                    if len(diff) == 1 and a[diff[0]] != DASH and b[diff[0]] != DASH:
                        merged = list(a)
                        merged[diff[0]] = DASH
                        next_level.add(tuple(merged))
                        used.add(a)
                        used.add(b)
        primes |= level - used
        level = next_level
    return sorted(primes)


def _essential_greedy_cover(primes: List[Cube], on_set: Set[int]) -> List[Cube]:
    covered_by = {m: [p for p in primes if _covers(p, m)] for m in on_set}
    chosen: List[Cube] = []
    for m in sorted(on_set):
        if len(covered_by[m]) == 1 and covered_by[m][0] not in chosen:
            chosen.append(covered_by[m][0])
    remaining = {m for m in on_set if not any(_covers(p, m) for p in chosen)}
    while remaining:
        best = min((p for p in primes if p not in chosen),
                   key=lambda p: (-sum(1 for m in remaining if _covers(p, m)), _n_literals(p), p))
        chosen.append(best)
        remaining = {m for m in remaining if not _covers(best, m)}
    return chosen


def _expansion_cover(cubes: List[Cube], primes: List[Cube], on_set: Set[int]) -> List[Cube]:
    chosen: List[Cube] = []
    for cube in cubes:
        best = min((p for p in primes if _contains(p, cube)), key=lambda p: (_n_literals(p), p))
        if best not in chosen:
            chosen.append(best)
    for prime in sorted(chosen, key=lambda p: (-_n_literals(p), p)):
        rest = [p for p in chosen if p != prime]
        if all(any(_covers(p, m) for p in rest) for m in on_set):
            chosen = rest
    return chosen


def simplify(formula: DnfFormula, var_limit: int = DEFAULT_QM_VAR_LIMIT) -> DnfFormula:
    """
    Minimize a DNF with Quine-McCluskey.

    Assignments not covered by the formula are false (no don't-cares). Two
    covers are built from the prime implicants: essential primes completed by
    a greedy set cover, and each input term widened to its smallest containing
    prime with redundant primes removed. The smaller one is returned, never
    with more literals or terms than the input.

    Args:
        formula (DnfFormula): formula to minimize
        var_limit (int): largest number of occurring variables to minimize

    Returns:
        DnfFormula: equivalent formula over the same variables, flagged with
        ``minimization_skipped`` when above the variable limit
    """
    if formula.is_false or formula.is_true:
        return formula
    occurring = sorted({lit.concept_index for term in formula.terms for lit in term})
    if len(occurring) > var_limit:
        logger.warning("class %d: %d variables exceed the minimization limit %d, formula left as is",
                       formula.class_index, len(occurring), var_limit)
        return replace(formula, minimization_skipped=True)

    n = len(occurring)
    position = {index: pos for pos, index in enumerate(occurring)}
    names = dict(formula.variables)
    cubes = [_to_cube(term, position, n) for term in formula.terms]
    on_set = {m for cube in cubes for m in _expand(cube)}
    if len(on_set) == 1 << n:
        return DnfFormula.true(formula.variables, formula.class_index)

    primes = prime_implicants(n, on_set)
    original = (formula.n_literals, formula.n_terms)
    covers = [_essential_greedy_cover(primes, on_set), _expansion_cover(cubes, primes, on_set)]
    admissible = [c for c in covers
                  if sum(map(_n_literals, c)) <= original[0] and len(c) <= original[1]]
    best = min(admissible or [cubes], key=lambda c: (sum(map(_n_literals, c)), len(c)))

    terms = []
    # per variable: negated before positive before absent
    for cube in sorted(best):
        terms.append(tuple(Literal(occurring[i], names[occurring[i]], v == 0)
                           for i, v in enumerate(cube) if v != DASH))
    return DnfFormula(tuple(terms), formula.variables, formula.class_index)


# Evaluation

def evaluate_batch(formula: DnfFormula, samples) -> np.ndarray:
    """
    Truth value of `formula` on each row of a boolean matrix over its variables.

    Raises:
        FormulaError: if the row width differs from the formula's variable count
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=bool))
    if samples.shape[1] != formula.width:
        raise FormulaError(f"sample has {samples.shape[1]} values but the formula has "
                           f"{formula.width} variables")
    result = np.zeros(samples.shape[0], dtype=bool)
    positions = formula.positions
    for term in formula.terms:
        hit = np.ones(samples.shape[0], dtype=bool)
        for lit in term:
            column = samples[:, positions[lit.concept_index]]
            hit &= ~column if lit.negated else column
        result |= hit
    return result


def evaluate(formula: DnfFormula, sample) -> bool:
    """Truth value of `formula` on one boolean assignment of its variables."""
    sample = np.asarray(sample, dtype=bool).reshape(-1)
    return bool(evaluate_batch(formula, sample[None, :])[0])


def formula_predictions(formula: DnfFormula, concepts, epsilon: float = 0.5) -> np.ndarray:
    """Evaluate `formula` on raw concept activations (all concepts, binarized at `epsilon`)."""
    bits = binarize_concepts(np.atleast_2d(concepts), epsilon)
    return evaluate_batch(formula, bits[:, [index for index, _ in formula.variables]])


# Rendering and parsing

def render(formula: DnfFormula, style: str = 'unicode') -> str:
    """
    Print a formula deterministically.

    Literals follow concept order. 'dnf-canonical' additionally sorts the terms
    and spells the connectives as AND/OR/NOT.
    """
    if style not in SYMBOLS:
        raise FormulaError(f"unknown style '{style}'; expected one of {sorted(SYMBOLS)}")
    if formula.is_false:
        return 'False'
    if formula.is_true:
        return 'True'
    sym = SYMBOLS[style]
    terms = list(formula.terms)
    if style == 'dnf-canonical':
        terms.sort(key=lambda t: [(lit.concept_index, lit.negated) for lit in t])
    parts = []
    for term in terms:
        text = sym['and'].join(f"{sym['not'] if lit.negated else ''}{lit.concept_name}" for lit in term)
        parts.append(f"({text})" if len(term) > 1 and len(terms) > 1 else text)
    return sym['or'].join(parts)


def _grammar() -> pp.ParserElement:
    true_ = pp.Keyword('True')
    false_ = pp.Keyword('False')
    name = pp.Regex(r"[^\s()&|~]+")
    literal = pp.Group(pp.Opt(pp.Literal('~'))('neg') + (true_ | false_ | name)('atom'))
    conjunction = pp.Group(literal + pp.ZeroOrMore(pp.Suppress('&') + literal))
    term = (pp.Suppress('(') + conjunction + pp.Suppress(')')) | conjunction
    return term + pp.ZeroOrMore(pp.Suppress('|') + term)


_GRAMMAR = _grammar()


def parse(text: str, variables: Sequence[Variable], class_index: int = 0) -> DnfFormula:
    """
    Parse a formula in the ascii grammar::

        expr := term ('|' term)*
        term := lit ('&' lit)*   (optionally parenthesized)
        lit  := '~'? NAME | 'True' | 'False'

    Args:
        text (str): formula text
        variables (Sequence[Variable]): (index, name) of the kept concepts
        class_index (int): class the formula explains

    Raises:
        FormulaError: on syntax errors or names outside `variables`
    """
    by_name = {name: int(index) for index, name in variables}
    try:
        parsed = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseException as e:
        raise FormulaError(f"cannot parse formula '{text}': {e}") from e

    terms: List[Term] = []
    for conjunction in parsed:
        literals: Dict[int, Literal] = {}
        satisfiable = True
        for token in conjunction:
            negated = bool(token.get('neg'))
            atom = token['atom']
            if atom in ('True', 'False'):
                if (atom == 'True') == negated:
                    satisfiable = False
                continue
            if atom not in by_name:
                raise FormulaError(f"unknown concept '{atom}'; valid names: {', '.join(by_name)}")
            index = by_name[atom]
            if index in literals and literals[index].negated != negated:
                satisfiable = False
            literals[index] = Literal(index, atom, negated)
        if satisfiable:
            terms.append(tuple(sorted(literals.values(), key=lambda lit: lit.concept_index)))
    return DnfFormula(tuple(terms), tuple(variables), class_index)


# Extraction pipeline

def explain_sample(network: EntropyNetwork, concepts_row, class_index: int,
                   epsilon: Optional[float] = None) -> Optional[DnfFormula]:
    """
    Single-minterm explanation of one observation.

    Returns:
        DnfFormula or None: the observation's minterm over the kept concepts,
        or None when the class output is negative
    """
    eps = network.config.epsilon if epsilon is None else epsilon
    row = np.asarray(concepts_row, dtype=np.float64).reshape(1, -1)
    scores, _ = predict(network, row)
    if scores[0, class_index] < eps:
        return None
    mask = compute_mask(class_scores(network, class_index), eps)
    kept = mask.kept
    variables = tuple((j, network.concept_names[j]) for j in kept)
    minterm = extract_minterm(binarize_concepts(row[0], eps)[list(kept)],
                              [name for _, name in variables], kept)
    return DnfFormula((minterm.literals,), variables, class_index)


def extract_class_formula(network: EntropyNetwork, train_set: ConceptDataset, val_set: ConceptDataset,
                          class_index: int, var_limit: int = DEFAULT_QM_VAR_LIMIT,
                          epsilon: Optional[float] = None) -> Tuple[DnfFormula, TruthTable]:
    """
    Truth table, aggregation and minimization for one class.

    A class without any positive training row gets the False formula.

    Returns:
        tuple: (simplified formula, truth table it came from)
    """
    eps = network.config.epsilon if epsilon is None else epsilon
    table = build_truth_table(train_set, network, class_index, eps)
    if not train_set.targets[:, class_index].any():
        logger.warning("class '%s' has no training samples, explanation is False",
                       network.class_names[class_index])
        return DnfFormula.false(table.variables, class_index), table
    formula = aggregate_class_formula(table, val_set, eps)
    return simplify(formula, var_limit), table


def extract_class_formulas(network: EntropyNetwork, train_set: ConceptDataset, val_set: ConceptDataset,
                           var_limit: int = DEFAULT_QM_VAR_LIMIT,
                           epsilon: Optional[float] = None) -> List[DnfFormula]:
    """:func:`extract_class_formula` for every class, in class order."""
    return [extract_class_formula(network, train_set, val_set, i, var_limit, epsilon)[0]
            for i in range(network.n_classes)]
