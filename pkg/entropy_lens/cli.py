"""
Command-line entry point: ``entropy-lens <command> [options]``.

Commands:
    synth     write a synthetic dataset (toy or parity) as CSV
    train     train one network and save it as a JSON artifact
    explain   print the class formulas of a saved network
    eval      score a saved network and its formulas on a dataset
    crossval  run k-fold cross-validation and write a report
    grid      sweep lambda and tau, one cross-validation per point
    report    print the summary of a saved report
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from tabulate import tabulate

from entropy_lens.config import ExperimentConfig, config_echo, load_config, parse_float_list
from entropy_lens.exceptions import ConfigError, EntropyLensError
from entropy_lens.experiments import (
    crossval, grid_sweep, load_dataset, load_report, remove_artifacts, split_validation, write_artifacts,
)
from entropy_lens.explainer import ConceptExplainer
from entropy_lens.layer import relevance_matrix
from entropy_lens.logic import render
from entropy_lens.metrics import class_fidelity, explanation_accuracy, fidelity, model_accuracy
from entropy_lens.models.dataset import ConceptDataset
from entropy_lens.models.network import EntropyNetwork
from entropy_lens.presets import DATASET_PRESETS
from entropy_lens.utils.data_utils import (
    load_csv, load_network, read_sample, save_network, synth_parity, synth_toy, write_csv,
)
from entropy_lens.utils.display_utils import fold_table, grid_markdown, relevance_table, report_markdown

logger = logging.getLogger('entropy_lens')

STYLES = ('unicode', 'ascii', 'dnf-canonical')


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not an integer")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = _non_negative_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a number")
    if not 0.0 <= value < 0.5:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 0.5), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='log progress (-v) or debugging details (-vv)')

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument('--config', help='TOML configuration file')
    experiment.add_argument('--preset', choices=sorted(DATASET_PRESETS), help='named hyperparameter preset')
    experiment.add_argument('--seed', type=int, help='experiment seed')
    experiment.add_argument('--lambda', dest='lambda_', type=float, help='regularization strength')
    experiment.add_argument('--tau', type=float, help='softmax temperature')
    experiment.add_argument('--epochs', type=_non_negative_int, help='training epochs')
    experiment.add_argument('--folds', type=_positive_int, help='cross-validation folds')

    parser = argparse.ArgumentParser(prog='entropy-lens',
                                     description='Entropy-based concept networks and their logic explanations.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', parents=[common], help='write a synthetic dataset as CSV')
    p.add_argument('kind', choices=('toy', 'parity'))
    p.add_argument('--pad', type=_non_negative_int, default=100, help='toy: all-zero padding concepts')
    p.add_argument('-n', type=_positive_int, default=2000, help='parity: number of samples')
    p.add_argument('--noise', type=_probability, default=0.0, help='parity: bit flip probability')
    p.add_argument('--seed', type=int, default=0, help='parity: sampling seed')
    p.add_argument('-o', '--out', required=True, help='output CSV path')

    p = sub.add_parser('train', parents=[common, experiment], help='train a network on the whole dataset')
    p.add_argument('-o', '--out', default='model.json', help='model artifact path')

    for name, text in (('explain', 'print the class formulas of a saved network'),
                       ('eval', 'score a saved network and its formulas')):
        p = sub.add_parser(name, parents=[common, experiment], help=text)
        p.add_argument('--model', required=True, help='model artifact written by train or crossval')
        p.add_argument('--data', help='CSV dataset (targets named like the model classes); '
                                      'defaults to the configured dataset')
        p.add_argument('--style', choices=STYLES, default='unicode', help='formula rendering')
        if name == 'explain':
            p.add_argument('--class', dest='class_name', help='explain a single class')
            p.add_argument('--sample', help='comma-separated concept row to explain on its own')

    p = sub.add_parser('crossval', parents=[common, experiment], help='k-fold cross-validation')
    p.add_argument('--out', help='output directory (overrides [output] directory)')
    p.add_argument('--style', choices=STYLES, help='rendering of the printed formulas')

    p = sub.add_parser('grid', parents=[common, experiment], help='lambda x tau sweep')
    p.add_argument('--lambdas', required=True, help='comma-separated lambda values')
    p.add_argument('--taus', required=True, help='comma-separated tau values')
    p.add_argument('--out', help='output directory (overrides [output] directory)')

    p = sub.add_parser('report', parents=[common], help='print a saved report')
    p.add_argument('path', help='report.json written by crossval')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    pairs = {
        'train.seed': getattr(args, 'seed', None),
        'train.lambda': getattr(args, 'lambda_', None),
        'train.tau': getattr(args, 'tau', None),
        'train.max_epochs': getattr(args, 'epochs', None),
        'dataset.folds': getattr(args, 'folds', None),
    }
    if args.command in ('crossval', 'grid'):
        pairs['output.directory'] = args.out
    if args.command == 'crossval':
        pairs['extract.style'] = args.style
    return {k: v for k, v in pairs.items() if v is not None}


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config, args.preset, _overrides(args))
    logger.info("seed %d, effective configuration %s", config.seed, json.dumps(config_echo(config)))
    return config


def _model_data(args: argparse.Namespace, network: EntropyNetwork) -> ConceptDataset:
    if args.data:
        return load_csv(args.data, network.class_names)
    return load_dataset(_load_config(args))


def cmd_synth(args: argparse.Namespace) -> int:
    dataset = synth_toy(args.pad) if args.kind == 'toy' else synth_parity(args.n, args.noise, args.seed)
    write_csv(dataset, args.out)
    print(f"wrote {args.out}: {dataset.n_samples} rows, {dataset.n_concepts} concepts, "
          f"{dataset.n_classes} targets")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = load_dataset(config)
    train_set, val_set = split_validation(dataset, config.train.val_fraction, config.seed)
    explainer = ConceptExplainer(config.train, config.qm_var_limit).fit(train_set, val_set)
    save_network(explainer.network, args.out)
    restored = explainer.history.best_epoch
    epoch = f"restored epoch {restored}" if restored is not None else f"{len(explainer.history.epochs)} epochs"
    print(f"wrote {args.out}: {epoch}, "
          f"accuracy {model_accuracy(explainer.network, dataset) * 100:.1f}% on {dataset.n_samples} samples")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    network = load_network(args.model)
    explainer = ConceptExplainer(network=network)
    if args.sample:
        if not args.class_name:
            raise ConfigError("--sample needs --class")
        formula = explainer.explain_sample(read_sample(args.sample, network.n_concepts), args.class_name)
        print(f"{args.class_name}: " + (render(formula, args.style) if formula is not None
                                        else "not predicted for this sample"))
        return 0

    dataset = _model_data(args, network)
    explainer.explain(dataset)
    selected = [explainer.class_index(args.class_name)] if args.class_name else range(network.n_classes)
    eps = network.config.epsilon
    rows = []
    for i in selected:
        formula = explainer.formulas[i]
        rows.append([network.class_names[i], render(formula, args.style), formula.n_literals,
                     f"{class_fidelity(formula, network, dataset, eps) * 100:.1f}"])
    print(tabulate(rows, headers=['Class', 'Formula', 'Complexity', 'Fidelity (%)'], tablefmt='grid'))
    print(relevance_table(relevance_matrix(network), network.concept_names, network.class_names))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    network = load_network(args.model)
    dataset = _model_data(args, network)
    explainer = ConceptExplainer(network=network)
    formulas = explainer.explain(dataset)
    eps = network.config.epsilon
    rows = [
        ['Model accuracy (%)', f"{model_accuracy(network, dataset) * 100:.1f}"],
        ['Explanation accuracy (%)', f"{explanation_accuracy(formulas, dataset, eps) * 100:.1f}"],
        ['Fidelity (%)', f"{fidelity(formulas, network, dataset, eps) * 100:.1f}"],
        ['Complexity (literals)', sum(f.n_literals for f in formulas)],
    ]
    print(tabulate(rows, headers=['Metric', 'Value'], tablefmt='grid'))
    for name, text, _ in explainer.formula_table(args.style):
        print(f"{name}: {text}")
    return 0


def cmd_crossval(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = crossval(config)
    write_artifacts(result, config.output_dir)
    print(report_markdown(result.report))
    print(fold_table(result.report.folds))
    if config.style != 'ascii':
        for fold in result.report.folds:
            for c in fold.per_class:
                print(f"fold {fold.fold} {c.name}: {render(c.formula, config.style)}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows = grid_sweep(config, parse_float_list(args.lambdas), parse_float_list(args.taus))
    out = Path(config.output_dir)
    created = [] if out.exists() else [out]
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        written.append(out / 'grid.json')
        written[-1].write_text(json.dumps({'config_echo': config_echo(config), 'rows': rows}, indent=2) + '\n',
                               encoding='utf-8')
        written.append(out / 'grid.md')
        written[-1].write_text(grid_markdown(rows) + '\n', encoding='utf-8')
    except OSError:
        remove_artifacts(written, created)
        raise
    print(grid_markdown(rows))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.path)
    print(report_markdown(report))
    print(fold_table(report.folds))
    return 0


COMMANDS = {
    'synth': cmd_synth,
    'train': cmd_train,
    'explain': cmd_explain,
    'eval': cmd_eval,
    'crossval': cmd_crossval,
    'grid': cmd_grid,
    'report': cmd_report,
}


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit code.

    Usage errors exit with 2 (raised by argparse), library errors return 1.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except EntropyLensError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
