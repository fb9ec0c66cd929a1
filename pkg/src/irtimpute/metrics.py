"""Imputation accuracy on exactly the cells that were filled in.

Scores compare imputed codes against ground truth over the imputation mask
only — untouched cells never dilute the result.  Per-category precision,
recall, and F1 come from the pooled confusion matrix; the macro average is
the unweighted mean over the categories that actually occur in the masked
truth (absent categories are reported, not averaged in as zeros); the
micro average pools all cells and therefore equals plain accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MISSING, CategoricalDataset
from .errors import DataError
from .impute import ImputedDataset

__all__ = ["CategoryScore", "ImputationReport", "score", "score_cells",
           "report_text"]


@dataclass(frozen=True)
class CategoryScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ImputationReport:
    """Confusion matrix (true x imputed) and derived scores."""

    confusion: np.ndarray = field(repr=False)
    per_category: tuple[CategoryScore, ...]
    macro_f1: float
    micro_f1: float
    cell_count: int
    macro_categories: tuple[int, ...]


def _safe_ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def score_cells(truth: CategoricalDataset, completed: CategoricalDataset,
                mask: tuple[tuple[int, int], ...]) -> ImputationReport:
    """Score a completed dataset against truth over the given cells."""
    if truth.schemas != completed.schemas:
        raise DataError("truth and completed datasets have different schemas")
    if truth.n_rows != completed.n_rows:
        raise DataError("truth and completed datasets have different sizes")
    if not mask:
        raise DataError("no imputed cells to score")
    arity = 0
    for row, col in mask:
        schema = truth.schemas[col]
        if not schema.is_categorical:
            raise DataError(
                f"cell ({row}, {col}) is in a non-categorical column"
            )
        assert schema.arity is not None
        arity = max(arity, schema.arity)
        if truth.cells[row, col] == MISSING:
            raise DataError(f"cell ({row}, {col}) is missing in the truth")
        if completed.cells[row, col] == MISSING:
            raise DataError(f"cell ({row}, {col}) was not imputed")

    confusion = np.zeros((arity, arity), dtype=np.int64)
    for row, col in mask:
        true_code = int(truth.cells[row, col])
        imputed_code = int(completed.cells[row, col])
        confusion[true_code, imputed_code] += 1

    per_category = []
    for k in range(arity):
        precision = _safe_ratio(confusion[k, k], confusion[:, k].sum())
        recall = _safe_ratio(confusion[k, k], confusion[k].sum())
        f1 = _safe_ratio(2 * precision * recall, precision + recall)
        per_category.append(CategoryScore(precision, recall, f1))

    present = tuple(int(k) for k in range(arity) if confusion[k].sum() > 0)
    macro_f1 = float(np.mean([per_category[k].f1 for k in present]))
    micro_f1 = float(np.trace(confusion) / len(mask))
    return ImputationReport(
        confusion=confusion,
        per_category=tuple(per_category),
        macro_f1=macro_f1,
        micro_f1=micro_f1,
        cell_count=len(mask),
        macro_categories=present,
    )


def score(truth: CategoricalDataset, imputed: ImputedDataset
          ) -> ImputationReport:
    """Score an imputation result against the complete ground truth."""
    return score_cells(truth, imputed.completed, imputed.mask)


def report_text(report: ImputationReport) -> str:
    """Human-readable rendering of an imputation report."""
    lines = [
        f"imputed cells: {report.cell_count}",
        f"micro F1 (accuracy): {report.micro_f1:.6f}",
        f"macro F1: {report.macro_f1:.6f} over categories "
        f"{list(report.macro_categories)}",
        "category precision recall f1 support",
    ]
    for k, cs in enumerate(report.per_category):
        support = int(report.confusion[k].sum())
        lines.append(
            f"{k} {cs.precision:.6f} {cs.recall:.6f} {cs.f1:.6f} {support}"
        )
    return "\n".join(lines) + "\n"
