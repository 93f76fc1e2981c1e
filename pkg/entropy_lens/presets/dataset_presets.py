"""
Named hyperparameter presets and their descriptions.

Each preset is laid out like a TOML configuration document (sections
[dataset], [train], [extract], [output]) so it can be merged with a config
file and command-line flags. The toy preset carries the long full-convergence
schedule used for the XOR/OR toy problem and keeps the parameters of the
last epoch; the others carry the per-dataset entropy-network hyperparameters
(regularization strength, temperature, epochs, hidden widths).
"""

# Entropy-network presets
DATASET_PRESETS = {
    'toy': {
        'dataset': {'source': 'toy', 'n_pad': 100, 'folds': 5, 'stratified': True},
        'train': {'lambda': 1e-4, 'tau': 0.3, 'learning_rate': 1e-4, 'max_epochs': 18000,
                  'hidden': [20, 10], 'activation': 'relu', 'val_fraction': 0.0,
                  'early_stopping': False},
    },
    'parity': {
        'dataset': {'source': 'parity', 'n': 2000, 'noise': 0.0, 'folds': 5},
        'train': {'lambda': 1e-7, 'tau': 5.0, 'learning_rate': 1e-2, 'max_epochs': 200,
                  'hidden': [10]},
    },
    'mimic': {
        'dataset': {'source': 'csv'},
        'train': {'lambda': 1e-3, 'tau': 0.7, 'learning_rate': 1e-2, 'max_epochs': 200,
                  'hidden': [20]},
    },
    'vdem': {
        'dataset': {'source': 'csv'},
        'train': {'lambda': 1e-5, 'tau': 5.0, 'learning_rate': 1e-2, 'max_epochs': 200,
                  'hidden': [20, 20]},
    },
    'cub': {
        'dataset': {'source': 'csv'},
        'train': {'lambda': 1e-4, 'tau': 0.7, 'learning_rate': 1e-2, 'max_epochs': 500,
                  'hidden': [10]},
    },
}

# Preset descriptions
PRESET_DESCRIPTIONS = {
    'toy': {
        'name': 'XOR / OR toy problem',
        'description': 'Eight samples over x1..x4 plus 100 all-zero padding concepts; targets y = x1 XOR x2, z = x3 OR x4 and their complements.',
        'expected': 'y <-> (x1 & ~x2) | (~x1 & x2) and z <-> x3 | x4; padding concepts gated out.'
    },
    'parity': {
        'name': 'Digit parity',
        'description': 'One-hot digit concepts zero..nine, targets even and odd.',
        'expected': 'odd <-> one | three | five | seven | nine on one-hot inputs; consistency 100%.'
    },
    'mimic': {
        'name': 'ICU recovery (user-supplied CSV)',
        'description': 'Discretized clinical features, two classes. Pass --config with [dataset] path and targets.',
        'expected': 'Short conjunctions of a few clinical flags.'
    },
    'vdem': {
        'name': 'Electoral democracy (user-supplied CSV)',
        'description': 'Mid-level democracy indices in [0, 1], two classes.',
        'expected': 'Disjunctions of a handful of negated indices.'
    },
    'cub': {
        'name': 'Bird species from attributes (user-supplied CSV)',
        'description': 'Denoised binary bird attributes, many classes.',
        'expected': 'Rules of about four attribute literals per species.'
    },
}
