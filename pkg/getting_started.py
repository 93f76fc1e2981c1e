#!/usr/bin/env python3
"""
Entropy Lens - Getting Started Script

This script walks through the main steps of the package on the XOR/OR toy
problem: generating the data, training an entropy network, reading its
concept relevances, extracting class formulas and cross-validating.

To run:
    python getting_started.py

Requirements:
    - entropy_lens package installed
    - dependencies from requirements.txt installed
"""

from entropy_lens.config import load_config, with_train
from entropy_lens.experiments import crossval, write_artifacts
from entropy_lens.explainer import ConceptExplainer
from entropy_lens.layer import relevance_matrix
from entropy_lens.metrics import explanation_accuracy, fidelity, model_accuracy
from entropy_lens.presets.dataset_presets import PRESET_DESCRIPTIONS
from entropy_lens.utils.data_utils import synth_toy
from entropy_lens.utils.display_utils import print_report, relevance_table


def print_section_header(title):
    """Print a formatted section header to make output more readable"""
    print("\n" + "=" * 80)
    print(f" {title} ".center(80, "="))
    print("=" * 80 + "\n")


def main():
    """Main function demonstrating Entropy Lens functionality"""
    print_section_header("ENTROPY LENS TUTORIAL")
    description = PRESET_DESCRIPTIONS['toy']
    print(f"{description['name']}: {description['description']}")
    print(f"Expected: {description['expected']}\n")

    # The full toy schedule is long; a shorter run is enough to see the gating
    config = load_config(preset='toy')
    config = with_train(config, max_epochs=3000, learning_rate=1e-3)
    dataset = synth_toy(config.dataset.n_pad)
    print(f"{dataset.n_samples} samples, {dataset.n_concepts} concepts, classes {', '.join(dataset.class_names)}")

    print_section_header("TRAINING")
    explainer = ConceptExplainer(config.train, config.qm_var_limit).fit(dataset)
    print(f"Trained for {len(explainer.history.epochs)} epochs")
    print(f"Model accuracy: {model_accuracy(explainer.network, dataset) * 100:.1f}%")

    print_section_header("CONCEPT RELEVANCE")
    print("Gate values close to 1 mark the concepts each class relies on.\n")
    print(relevance_table(relevance_matrix(explainer.network), dataset.concept_names, dataset.class_names))

    print_section_header("CLASS FORMULAS")
    formulas = explainer.explain(dataset)
    for name, text, literals in explainer.formula_table('unicode'):
        print(f"{name:>6}: {text}   ({literals} literals)")
    print(f"\nExplanation accuracy: {explanation_accuracy(formulas, dataset) * 100:.1f}%")
    print(f"Fidelity: {fidelity(formulas, explainer.network, dataset) * 100:.1f}%")

    print_section_header("CROSS-VALIDATION")
    config = with_train(load_config(preset='toy', overrides={'dataset.folds': 2}), max_epochs=1000,
                        learning_rate=1e-3)
    result = crossval(config)
    print_report(result.report)
    written = write_artifacts(result, 'getting_started_results')
    print(f"\nWrote {len(written)} files to getting_started_results/")

    print_section_header("NEXT STEPS")
    print("Run the command-line tool for the other datasets, for example:")
    print("  entropy-lens synth parity -n 2000 -o parity.csv")
    print("  entropy-lens crossval --preset parity --out results/parity")


if __name__ == "__main__":
    main()
