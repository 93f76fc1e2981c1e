"""
Configuration objects and the TOML configuration loader.

Precedence when building an experiment configuration is
preset < config file < command-line overrides.
"""

import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: API-identical backport
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from entropy_lens.exceptions import ConfigError
from entropy_lens.presets import DATASET_PRESETS

logger = logging.getLogger(__name__)

REGULARIZERS = ('entropy', 'l1', 'none')
TASK_LOSSES = ('auto', 'softmax', 'sigmoid')
DATASET_SOURCES = ('csv', 'toy', 'parity')
RENDER_STYLES = ('unicode', 'ascii', 'dnf-canonical')


@dataclass(frozen=True)
class TrainConfig:
    """
    Hyperparameters of one entropy-network training run.

    Attributes:
        lambda_ (float): weight of the concept regularizer
        tau (float): softmax temperature of the entropy layer
        learning_rate (float): AdamW step size
        max_epochs (int): number of full-batch epochs
        epsilon (float): threshold used to binarize concepts and outputs
        regularizer_kind (str): 'entropy', 'l1' or 'none'
        seed (int): seed for weight initialization and data splits
        early_stopping (bool): restore the best-validation parameters
        weight_decay (float): decoupled AdamW weight decay
        hidden (Tuple[int, ...]): hidden layer widths, the first one being the entropy layer width
        activation (str): hidden activation name
        leaky_slope (float): negative slope of the leaky rectifier
        task_loss (str): 'auto', 'softmax' or 'sigmoid'
        entropy_layer (bool): gate inputs with the concept scores (False gives a plain linear first layer)
        val_fraction (float): share of the training portion held out for validation, 0 reuses the training portion
    """
    lambda_: float = 1e-4
    tau: float = 0.7
    learning_rate: float = 1e-2
    max_epochs: int = 200
    epsilon: float = 0.5
    regularizer_kind: str = 'entropy'
    seed: int = 0
    early_stopping: bool = True
    weight_decay: float = 0.0
    hidden: Tuple[int, ...] = (10,)
    activation: str = 'leaky_relu'
    leaky_slope: float = 0.01
    task_loss: str = 'auto'
    entropy_layer: bool = True
    val_fraction: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        if self.lambda_ < 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lambda_}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be non-negative, got {self.max_epochs}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.regularizer_kind not in REGULARIZERS:
            raise ConfigError(f"regularizer_kind must be one of {REGULARIZERS}, got '{self.regularizer_kind}'")
        if self.task_loss not in TASK_LOSSES:
            raise ConfigError(f"task_loss must be one of {TASK_LOSSES}, got '{self.task_loss}'")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden must list at least one positive width, got {self.hidden}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must lie in [0, 1), got {self.val_fraction}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("AdamW betas must lie in [0, 1)")


@dataclass(frozen=True)
class DatasetSpec:
    """Where the concept dataset comes from."""
    source: str = 'toy'
    path: Optional[str] = None
    targets: Tuple[str, ...] = ()
    discretize: Tuple[str, ...] = ()
    n_pad: int = 100
    n: int = 2000
    noise: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(self.targets))
        object.__setattr__(self, 'discretize', tuple(self.discretize))
        if self.source not in DATASET_SOURCES:
            raise ConfigError(f"dataset source must be one of {DATASET_SOURCES}, got '{self.source}'")
        if self.source == 'csv' and not self.path:
            raise ConfigError("csv datasets need a path")
        if self.n_pad < 0:
            raise ConfigError(f"n_pad must be non-negative, got {self.n_pad}")
        if not 0.0 <= self.noise < 0.5:
            raise ConfigError(f"noise must lie in [0, 0.5), got {self.noise}")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Full description of a cross-validated experiment.

    Attributes:
        dataset (DatasetSpec): dataset source and generator parameters
        train (TrainConfig): network hyperparameters
        folds (int): number of cross-validation folds
        stratified (bool): stratify fold assignment on the target pattern
        qm_var_limit (int): largest variable count handed to Quine-McCluskey
        style (str): rendering style of the formula text files
        output_dir (str): directory receiving the report artifacts
        record_timings (bool): write wall-clock timings into the report
        preset (Optional[str]): name of the preset the config started from
    """
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    folds: int = 5
    stratified: bool = True
    qm_var_limit: int = 16
    style: str = 'ascii'
    output_dir: str = 'results'
    record_timings: bool = False
    preset: Optional[str] = None

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.qm_var_limit < 1:
            raise ConfigError(f"qm_var_limit must be positive, got {self.qm_var_limit}")
        if self.style not in RENDER_STYLES:
            raise ConfigError(f"style must be one of {RENDER_STYLES}, got '{self.style}'")

    @property
    def seed(self) -> int:
        return self.train.seed


# TOML section -> {toml key: (target block, field name)}
_SECTION_KEYS: Dict[str, Dict[str, Tuple[str, str]]] = {
    'dataset': {
        'source': ('dataset', 'source'),
        'path': ('dataset', 'path'),
        'targets': ('dataset', 'targets'),
        'discretize': ('dataset', 'discretize'),
        'n_pad': ('dataset', 'n_pad'),
        'n': ('dataset', 'n'),
        'noise': ('dataset', 'noise'),
        'folds': ('experiment', 'folds'),
        'stratified': ('experiment', 'stratified'),
    },
    'train': {
        'lambda': ('train', 'lambda_'),
        **{f.name: ('train', f.name) for f in fields(TrainConfig) if f.name != 'lambda_'},
    },
    'extract': {
        'qm_var_limit': ('experiment', 'qm_var_limit'),
        'style': ('experiment', 'style'),
    },
    'output': {
        'directory': ('experiment', 'output_dir'),
        'record_timings': ('experiment', 'record_timings'),
    },
}


def _empty_blocks() -> Dict[str, Dict[str, Any]]:
    return {'dataset': {}, 'train': {}, 'experiment': {}}


def _merge_document(blocks: Dict[str, Dict[str, Any]], document: Dict[str, Any], origin: str) -> None:
    for section, values in document.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"{origin}: [{section}] must be a table")
        for key, value in values.items():
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"{origin}: unknown key '{key}' in [{section}]")
            block, name = _SECTION_KEYS[section][key]
            blocks[block][name] = value


def _build(blocks: Dict[str, Dict[str, Any]], preset: Optional[str]) -> ExperimentConfig:
    try:
        dataset = DatasetSpec(**blocks['dataset'])
        train = TrainConfig(**blocks['train'])
        return ExperimentConfig(dataset=dataset, train=train, preset=preset, **blocks['experiment'])
    except TypeError as e:
        raise ConfigError(f"invalid configuration value: {e}") from e


def preset_blocks(name: str) -> Dict[str, Dict[str, Any]]:
    """Return the configuration blocks of a named preset."""
    if name not in DATASET_PRESETS:
        raise ConfigError(f"unknown preset '{name}'; available: {', '.join(sorted(DATASET_PRESETS))}")
    blocks = _empty_blocks()
    _merge_document(blocks, DATASET_PRESETS[name], f"preset '{name}'")
    return blocks


def load_config(path: Optional[str] = None, preset: Optional[str] = None,
                overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a preset, a TOML file and flag overrides.

    Args:
        path (str, optional): TOML configuration file
        preset (str, optional): name of a preset in `entropy_lens.presets`
        overrides (dict, optional): section-qualified overrides such as
            ``{'train.lambda': 1e-3, 'dataset.folds': 2}``

    Returns:
        ExperimentConfig: the validated effective configuration

    Raises:
        ConfigError: missing file, unknown section/key or invalid value
    """
    blocks = preset_blocks(preset) if preset else _empty_blocks()

    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"config not found: {path}")
        try:
            with open(config_path, 'rb') as fh:
                document = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        _merge_document(blocks, document, str(path))

    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition('.')
        _merge_document(blocks, {section: {key: value}}, 'command line')

    config = _build(blocks, preset)
    logger.debug("effective configuration: %s", config_echo(config))
    return config


def with_train(config: ExperimentConfig, **changes: Any) -> ExperimentConfig:
    """Copy of `config` with some TrainConfig fields replaced."""
    return replace(config, train=replace(config.train, **changes))


def config_echo(config: ExperimentConfig) -> Dict[str, Any]:
    """JSON-ready view of the effective configuration, in TOML section layout."""
    raw = asdict(config)
    train = dict(raw['train'])
    train['lambda'] = train.pop('lambda_')
    train['hidden'] = list(train['hidden'])
    dataset = dict(raw['dataset'])
    dataset['targets'] = list(dataset['targets'])
    dataset['discretize'] = list(dataset['discretize'])
    dataset['folds'] = config.folds
    dataset['stratified'] = config.stratified
    return {
        'preset': config.preset,
        'dataset': dataset,
        'train': dict(sorted(train.items())),
        'extract': {'qm_var_limit': config.qm_var_limit, 'style': config.style},
        'output': {'directory': config.output_dir, 'record_timings': config.record_timings},
    }


def parse_float_list(raw: str) -> List[float]:
    """Parse a comma-separated list of floats, keeping order and dropping duplicates."""
    values: List[float] = []
    for part in (p.strip() for p in raw.split(',')):
        if not part:
            continue
        try:
            value = float(part)
        except ValueError as e:
            raise ConfigError(f"'{part}' is not a number") from e
        if value not in values:
            values.append(value)
    if not values:
        raise ConfigError("expected at least one value")
    return values
