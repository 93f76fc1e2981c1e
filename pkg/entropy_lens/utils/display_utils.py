"""
Display utilities for entropy_lens.
"""

from typing import Dict, List, Sequence

import numpy as np
from tabulate import tabulate

from entropy_lens.models.report import ExplanationReport, FoldResult

# Summary rows: (label, aggregate key, scale, unit)
SUMMARY_METRICS = (
    ('Model accuracy', 'model_accuracy', 100.0, '%'),
    ('Explanation accuracy', 'explanation_accuracy', 100.0, '%'),
    ('Fidelity', 'fidelity', 100.0, '%'),
    ('Complexity', 'complexity', 1.0, 'literals'),
    ('Extraction time', 'extraction_time', 1.0, 's'),
)


def format_mean_sem(mean: float, sem: float, scale: float = 1.0, digits: int = 1) -> str:
    return f"{mean * scale:.{digits}f} ± {sem * scale:.{digits}f}"


def summary_markdown(report: ExplanationReport) -> str:
    """
    Markdown table of the fold-aggregated metrics of a report.

    Args:
        report (ExplanationReport): cross-validation report

    Returns:
        str: Markdown-formatted table
    """
    rows = []
    for label, key, scale, unit in SUMMARY_METRICS:
        digits = 3 if key == 'extraction_time' else 1
        rows.append([label, format_mean_sem(report.aggregate[f"{key}_mean"],
                                            report.aggregate[f"{key}_sem"], scale, digits), unit])
    rows.append(['Consistency', f"{report.consistency * 100.0:.1f}", '%'])
    return tabulate(rows, headers=['Metric', 'Mean ± SEM', 'Unit'], tablefmt='pipe')


def fold_table(folds: Sequence[FoldResult]) -> str:
    """Grid table with one row per fold."""
    rows = [[f.fold, f"{f.model_accuracy * 100:.1f}", f"{f.explanation_accuracy * 100:.1f}",
             f"{f.fidelity * 100:.1f}", f"{f.complexity:.1f}", f"{f.extraction_time_seconds:.3f}"]
            for f in folds]
    return tabulate(rows, headers=['Fold', 'Model acc (%)', 'Expl acc (%)', 'Fidelity (%)',
                                   'Complexity', 'Time (s)'], tablefmt='grid')


def formula_listing(report: ExplanationReport) -> str:
    """Markdown list of every class formula, fold by fold."""
    lines: List[str] = []
    for name, formulas in report.formulas_by_class().items():
        lines.append(f"### {name}")
        lines.append("")
        lines.extend(f"- fold {i}: `{text}`" for i, text in enumerate(formulas))
        lines.append("")
    return "\n".join(lines)


def report_markdown(report: ExplanationReport, title: str = 'Cross-validation summary') -> str:
    """Title, aggregate table and formula listing as one Markdown document."""
    markdown_text = f"## {title}\n\n"
    markdown_text += summary_markdown(report)
    markdown_text += "\n\n## Formulas\n\n"
    markdown_text += formula_listing(report)
    return markdown_text


def grid_markdown(rows: Sequence[Dict[str, float]]) -> str:
    """
    Markdown table of a hyperparameter sweep.

    Args:
        rows: dicts with ``lambda``, ``tau`` and the aggregated
            ``model_accuracy``, ``explanation_accuracy`` and ``complexity`` means and SEMs

    Returns:
        str: Markdown-formatted table
    """
    table = [[f"{r['lambda']:g}", f"{r['tau']:g}",
              format_mean_sem(r['model_accuracy_mean'], r['model_accuracy_sem'], 100.0),
              format_mean_sem(r['explanation_accuracy_mean'], r['explanation_accuracy_sem'], 100.0),
              format_mean_sem(r['complexity_mean'], r['complexity_sem'])]
             for r in rows]
    return tabulate(table, headers=['λ', 'τ', 'Model accuracy (%)', 'Explanation accuracy (%)', 'Complexity'],
                    tablefmt='pipe')


def relevance_table(relevance: np.ndarray, concept_names: Sequence[str], class_names: Sequence[str],
                    top: int = 5) -> str:
    """Grid table of the `top` highest-gated concepts of each class."""
    relevance = np.asarray(relevance)
    rows = []
    for i, name in enumerate(class_names):
        order = sorted(range(len(concept_names)), key=lambda j: (-relevance[i, j], j))[:top]
        rows.append([name, ", ".join(f"{concept_names[j]} ({relevance[i, j]:.2f})" for j in order)])
    return tabulate(rows, headers=['Class', f'Top {top} concepts (gate)'], tablefmt='grid')


def print_report(report: ExplanationReport) -> str:
    """Print the aggregate table, the per-fold table and the formulas; return the Markdown text."""
    markdown_text = report_markdown(report)
    print(markdown_text)
    print(fold_table(report.folds))
    return markdown_text
