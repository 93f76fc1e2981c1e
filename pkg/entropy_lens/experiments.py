"""
Cross-validation, hyperparameter sweeps and report persistence.

All randomness of an experiment derives from one seed: fold assignment uses
it directly and every fold gets its own seed (weight initialization and
validation split) spawned from it.
"""

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold, StratifiedKFold, train_test_split

from entropy_lens.config import ExperimentConfig, config_echo, with_train
from entropy_lens.exceptions import ConfigError
from entropy_lens.explainer import ConceptExplainer
from entropy_lens.logic import parse
from entropy_lens.metrics import aggregate_folds, consistency
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.network import EntropyNetwork
from entropy_lens.models.report import ClassExplanationResult, ExplanationReport, FoldResult
from entropy_lens.utils.data_utils import load_csv, save_network, synth_parity, synth_toy
from entropy_lens.utils.display_utils import report_markdown

logger = logging.getLogger(__name__)

THREADS_ENV = 'ENTROPY_LENS_THREADS'
REPORT_FORMAT = 'entropy-lens-report'
REPORT_VERSION = 1
# accuracies, fidelity, F1 and consistency are stored in [0, 1]; displays scale them to percent
REPORT_UNITS = {'rates': 'fraction', 'times': 'seconds'}


@dataclass
class CrossvalResult:
    """A report together with the trained network of every fold."""
    report: ExplanationReport
    networks: List[EntropyNetwork]


def load_dataset(config: ExperimentConfig) -> ConceptDataset:
    """Build the dataset described by ``config.dataset``."""
    spec = config.dataset
    if spec.source == 'toy':
        return synth_toy(spec.n_pad)
    if spec.source == 'parity':
        return synth_parity(spec.n, spec.noise, config.seed)
    return load_csv(spec.path, spec.targets, spec.discretize)


def fold_seeds(seed: int, folds: int) -> List[int]:
    """Independent per-fold seeds derived from the experiment seed."""
    return [int(np.random.SeedSequence(seed, spawn_key=(fold,)).generate_state(1)[0])
            for fold in range(folds)]


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, '1')
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    return max(1, value)


def make_folds(dataset: ConceptDataset, folds: int, seed: int,
               stratified: bool = True) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Shuffled k-fold partition as (train indices, test indices) pairs.

    Stratification is on the target pattern of each row. When no pattern has
    at least `folds` rows the partition falls back to plain k-fold.
    """
    if folds > dataset.n_samples:
        raise ConfigError(f"cannot split {dataset.n_samples} samples into {folds} folds")
    indices = np.arange(dataset.n_samples)
    strata = dataset.strata
    if stratified and np.bincount(strata).max() >= folds:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
        return [(tr, te) for tr, te in splitter.split(indices, strata)]
    if stratified:
        logger.warning("no target pattern has %d rows, using unstratified folds", folds)
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(tr, te) for tr, te in splitter.split(indices)]


def split_validation(train_portion: ConceptDataset, val_fraction: float,
                     seed: int) -> Tuple[ConceptDataset, ConceptDataset]:
    """Hold out `val_fraction` of the training portion; 0 validates on the training rows themselves."""
    n = train_portion.n_samples
    n_val = int(round(val_fraction * n))
    if val_fraction == 0 or n_val == 0 or n_val >= n:
        if val_fraction > 0:
            logger.warning("training portion of %d rows too small for a %.2f validation split", n, val_fraction)
        return train_portion, train_portion
    train_idx, val_idx = train_test_split(np.arange(n), test_size=n_val, random_state=seed, shuffle=True)
    return train_portion.subset(np.sort(train_idx)), train_portion.subset(np.sort(val_idx))


def _run_fold(config: ExperimentConfig, dataset: ConceptDataset, fold: int, seed: int,
              train_idx: np.ndarray, test_idx: np.ndarray) -> Tuple[FoldResult, EntropyNetwork]:
    train_cfg = replace(config.train, seed=seed)
    train_set, val_set = split_validation(dataset.subset(train_idx), train_cfg.val_fraction, seed)
    explainer = ConceptExplainer(train_cfg, config.qm_var_limit)
    result = explainer.run(train_set, val_set, dataset.subset(test_idx), fold=fold)
    result.seed = seed
    if not config.record_timings:
        result.time_train_s = 0.0
        result.time_extract_s = 0.0
    return result, explainer.network


def crossval(config: ExperimentConfig, dataset: Optional[ConceptDataset] = None) -> CrossvalResult:
    """
    K-fold cross-validation of training, extraction and scoring.

    Folds may run concurrently (``ENTROPY_LENS_THREADS``); results are
    collected in fold order.

    Args:
        config (ExperimentConfig): experiment description
        dataset (ConceptDataset, optional): data to use instead of ``config.dataset``

    Returns:
        CrossvalResult: report and per-fold networks
    """
    dataset = load_dataset(config) if dataset is None else dataset
    splits = make_folds(dataset, config.folds, config.seed, config.stratified)
    seeds = fold_seeds(config.seed, config.folds)
    logger.info("cross-validating %d folds on %s (seed %d)", config.folds, dataset.provenance or 'data',
                config.seed)

    with ThreadPoolExecutor(max_workers=min(thread_count(), config.folds)) as pool:
        outcomes = list(pool.map(lambda f: _run_fold(config, dataset, f, seeds[f], *splits[f]),
                                 range(config.folds)))

    folds = [result for result, _ in outcomes]
    report = ExplanationReport(
        config_echo=config_echo(config),
        folds=folds,
        consistency=consistency([[c.formula for c in fold.per_class] for fold in folds]),
        aggregate=aggregate_folds(folds),
    )
    return CrossvalResult(report, [network for _, network in outcomes])


def grid_sweep(config: ExperimentConfig, lambdas: Sequence[float], taus: Sequence[float],
               dataset: Optional[ConceptDataset] = None) -> List[Dict[str, Any]]:
    """
    Cross-validate every (lambda, tau) pair.

    Returns:
        list: one row per grid point with ``lambda``, ``tau``, the aggregate
        metrics of its report and its consistency
    """
    if not lambdas or not taus:
        raise ConfigError("grid sweep needs at least one lambda and one tau")
    dataset = load_dataset(config) if dataset is None else dataset
    rows = []
    for lam in lambdas:
        for tau in taus:
            logger.info("grid point lambda=%g tau=%g", lam, tau)
            report = crossval(with_train(config, lambda_=float(lam), tau=float(tau)), dataset).report
            rows.append({'lambda': float(lam), 'tau': float(tau), **report.aggregate,
                         'consistency': report.consistency})
    return rows


# Report persistence

def report_to_dict(report: ExplanationReport) -> Dict[str, Any]:
    """JSON-ready report document."""
    return {
        'format': REPORT_FORMAT,
        'version': REPORT_VERSION,
        'units': REPORT_UNITS,
        'config_echo': report.config_echo,
        'folds': [
            {
                'fold': fold.fold,
                'seed': fold.seed,
                'n_train': fold.n_train,
                'n_val': fold.n_val,
                'n_test': fold.n_test,
                'best_epoch': fold.best_epoch,
                'model_accuracy': fold.model_accuracy,
                'explanation_accuracy': fold.explanation_accuracy,
                'fidelity': fold.fidelity,
                'per_class': [
                    {
                        'name': c.name,
                        'class_index': c.class_index,
                        'formula': c.formula_text,
                        'variables': [list(v) for v in c.formula.variables],
                        'minimization_skipped': c.formula.minimization_skipped,
                        'f1': c.f1,
                        'complexity_literals': c.complexity_literals,
                        'complexity_minterms': c.complexity_minterms,
                        'fidelity': c.fidelity,
                        'contradictions': c.contradictions,
                    }
                    for c in fold.per_class
                ],
                'relevance': fold.relevance,
                'time_train_s': fold.time_train_s,
                'time_extract_s': fold.time_extract_s,
            }
            for fold in report.folds
        ],
        'aggregate': report.aggregate,
        'consistency': report.consistency,
    }


def report_from_dict(data: Dict[str, Any]) -> ExplanationReport:
    """Inverse of :func:`report_to_dict`; formulas are re-parsed from their text."""
    if data.get('format') != REPORT_FORMAT:
        raise ConfigError("not an explanation report")
    folds = []
    for entry in data['folds']:
        per_class = []
        for c in entry['per_class']:
            variables = [tuple(v) for v in c['variables']]
            formula = parse(c['formula'], variables, c['class_index'])
            if c.get('minimization_skipped'):
                formula = replace(formula, minimization_skipped=True)
            per_class.append(ClassExplanationResult(
                class_index=c['class_index'], name=c['name'], formula=formula, formula_text=c['formula'],
                f1=c['f1'], fidelity=c['fidelity'], contradictions=c.get('contradictions', 0)))
        folds.append(FoldResult(
            fold=entry['fold'], seed=entry['seed'], model_accuracy=entry['model_accuracy'],
            per_class=per_class, time_train_s=entry['time_train_s'], time_extract_s=entry['time_extract_s'],
            relevance=entry['relevance'], n_train=entry['n_train'], n_val=entry['n_val'],
            n_test=entry['n_test'], best_epoch=entry['best_epoch']))
    return ExplanationReport(data['config_echo'], folds, data['consistency'], data['aggregate'])


def dumps_report(report: ExplanationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + '\n'


def save_report(report: ExplanationReport, path) -> None:
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dumps_report(report))


def load_report(path) -> ExplanationReport:
    try:
        with open(path, encoding='utf-8') as fh:
            return report_from_dict(json.load(fh))
    except FileNotFoundError as e:
        raise ConfigError(f"report not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not a JSON document ({e})") from e


def write_artifacts(result: CrossvalResult, output_dir) -> List[Path]:
    """
    Write the report JSON, Markdown summary, per-fold formula files and model artifacts.

    On a write error every file and directory created so far is removed
    before the error propagates.

    Returns:
        list: every path written, in writing order
    """
    out = Path(output_dir)
    created = [d for d in (out, out / 'formulas', out / 'models') if not d.exists()]
    written: List[Path] = []
    try:
        for directory in (out / 'formulas', out / 'models'):
            directory.mkdir(parents=True, exist_ok=True)

        written.append(out / 'report.json')
        save_report(result.report, written[-1])
        written.append(out / 'summary.md')
        written[-1].write_text(report_markdown(result.report) + '\n', encoding='utf-8')

        for fold, network in zip(result.report.folds, result.networks):
            written.append(out / 'formulas' / f"fold_{fold.fold}.txt")
            written[-1].write_text(''.join(f"{c.name}: {c.formula_text}\n" for c in fold.per_class),
                                   encoding='utf-8')
            written.append(out / 'models' / f"fold_{fold.fold}.json")
            save_network(network, written[-1])
    except OSError:
        remove_artifacts(written, created)
        raise
    return written


def remove_artifacts(paths: Sequence[Path], directories: Sequence[Path] = ()) -> None:
    """
    Delete files written by a failed run, then the directories it created.

    Missing files are ignored; directories are removed deepest first and only
    when empty.
    """
    for path in paths:
        try:
            Path(path).unlink()
        except FileNotFoundError:
            pass
    for directory in sorted(map(Path, directories), key=lambda d: len(d.parts), reverse=True):
        try:
            directory.rmdir()
        except OSError:
            pass
