"""Accuracy and confusion reporting, human-AI agreement, and the cost model.

All operations are pure functions over immutable inputs. Percentages are
displayed at two decimals with half-up rounding, computed in exact integer
arithmetic so display never depends on float noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Optional, Sequence, Tuple

from .core import Annotation, AnnotationStatus
from .errors import EmptyEvaluationError, NegativeParamError
from .taxonomy import MatchPolicy, MatchResult, Taxonomy, match, normalize, predicted_class


def percent_display(numerator: int, denominator: int) -> str:
    """Exact half-up percentage with two decimals, e.g. 269/270 -> "99.63"."""
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    scaled, remainder = divmod(numerator * 10000, denominator)
    if 2 * remainder >= denominator:
        scaled += 1
    return f"{scaled // 100}.{scaled % 100:02d}"


def money_display(amount: float) -> str:
    """Two-decimal half-up currency display."""
    quantized = Decimal(str(amount)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    if quantized == 0:
        quantized = abs(quantized)  # avoid "-0.00"
    return str(quantized)


@dataclass(frozen=True)
class AccuracyReport:
    total: int
    correct: int
    accuracy: float
    per_class: Dict[str, Tuple[int, int]]  # class -> (total, correct)
    display: str
    unlabeled: int = 0  # truth entries with no scoreable prediction, counted as misses

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "display": self.display,
            "unlabeled": self.unlabeled,
            "per_class": {
                name: {"total": t, "correct": c}
                for name, (t, c) in sorted(self.per_class.items())
            },
        }


def compute_accuracy(
    results: Sequence[Tuple[str, MatchResult]], unlabeled: int = 0
) -> AccuracyReport:
    """Tally match results per truth class.

    ``unlabeled`` counts items that had ground truth but nothing scoreable
    (e.g. labeling failed); they are included in the total as misses and
    reported separately.

    Raises:
        EmptyEvaluationError: no results at all.
    """
    if not results and unlabeled == 0:
        raise EmptyEvaluationError("nothing to evaluate")
    total = len(results) + unlabeled
    correct = sum(1 for _, r in results if r.matched)
    per_class: Dict[str, Tuple[int, int]] = {}
    for truth, result in results:
        t, c = per_class.get(truth, (0, 0))
        per_class[truth] = (t + 1, c + 1 if result.matched else c)
    return AccuracyReport(
        total=total,
        correct=correct,
        accuracy=correct / total,
        per_class=per_class,
        display=percent_display(correct, total),
        unlabeled=unlabeled,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: List[str]           # actual (truth) classes, row order
    columns: List[str]           # predicted classes; superset of classes
    counts: Dict[str, Dict[str, int]]  # counts[actual][predicted]

    def row(self, actual: str) -> List[int]:
        return [self.counts[actual].get(col, 0) for col in self.columns]

    def as_rows(self) -> List[List[int]]:
        return [self.row(actual) for actual in self.classes]

    def total(self) -> int:
        return sum(sum(row.values()) for row in self.counts.values())

    def to_dict(self) -> dict:
        return {"classes": self.classes, "columns": self.columns, "rows": self.as_rows()}


def confusion_matrix(results: Sequence[Tuple[str, str]]) -> ConfusionMatrix:
    """Tally (truth class, predicted class) pairs.

    Rows are the truth classes; predicted classes outside the truth set get
    their own extra columns.

    Raises:
        EmptyEvaluationError: no results.
    """
    if not results:
        raise EmptyEvaluationError("nothing to tally")
    actual_classes = sorted({truth for truth, _ in results})
    extra = sorted({pred for _, pred in results if pred not in set(actual_classes)})
    columns = actual_classes + extra
    counts: Dict[str, Dict[str, int]] = {a: {} for a in actual_classes}
    for truth, pred in results:
        counts[truth][pred] = counts[truth].get(pred, 0) + 1
    return ConfusionMatrix(classes=actual_classes, columns=columns, counts=counts)


def evaluate_annotations(
    annotations: Sequence[Annotation],
    truth: Dict[str, str],
    policy: MatchPolicy,
    taxonomy: Taxonomy,
) -> Tuple[AccuracyReport, ConfusionMatrix]:
    """Score AI labels against a ground-truth side-table.

    ``truth`` maps annotation id to the expected label. Annotations without
    a truth entry are skipped; truth entries whose annotation never received
    an AI label count as unlabeled misses.

    Raises:
        EmptyEvaluationError: no truth entry matched any annotation.
    """
    pairs: List[Tuple[str, MatchResult]] = []
    cells: List[Tuple[str, str]] = []
    unlabeled = 0
    for ann in annotations:
        expected = truth.get(ann.id)
        if expected is None:
            continue
        if ann.ai_label is None:
            unlabeled += 1
            continue
        truth_class = normalize(expected, taxonomy)
        pairs.append((truth_class, match(ann.ai_label, expected, policy, taxonomy)))
        cells.append((truth_class, predicted_class(ann.ai_label, policy, taxonomy)))
    report = compute_accuracy(pairs, unlabeled=unlabeled)
    matrix = confusion_matrix(cells) if cells else ConfusionMatrix([], [], {})
    return report, matrix


@dataclass(frozen=True)
class ClassAgreement:
    accepted: int
    corrected: int

    @property
    def acceptance_rate(self) -> Optional[float]:
        denom = self.accepted + self.corrected
        return self.accepted / denom if denom else None


@dataclass(frozen=True)
class AgreementStats:
    per_class: Dict[str, ClassAgreement] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            name: {
                "accepted": s.accepted,
                "corrected": s.corrected,
                "acceptance_rate": s.acceptance_rate,
            }
            for name, s in sorted(self.per_class.items())
        }


def agreement_stats(annotations: Sequence[Annotation]) -> AgreementStats:
    """Acceptance vs correction counts per AI base class.

    Only terminal human verdicts count: Verified as accepted, Corrected as
    corrected. Flagged and still-pending annotations are excluded. Keyed by
    the AI label's base class (fine label when no base was given).
    """
    per_class: Dict[str, ClassAgreement] = {}
    for ann in annotations:
        if ann.status not in (AnnotationStatus.VERIFIED, AnnotationStatus.CORRECTED):
            continue
        if ann.ai_label is None:
            continue
        key = (ann.ai_label.base or ann.ai_label.fine).strip().casefold()
        current = per_class.get(key, ClassAgreement(0, 0))
        if ann.status is AnnotationStatus.VERIFIED:
            per_class[key] = ClassAgreement(current.accepted + 1, current.corrected)
        else:
            per_class[key] = ClassAgreement(current.accepted, current.corrected + 1)
    return AgreementStats(per_class=per_class)


@dataclass(frozen=True)
class CostParams:
    n_items: int
    human_full_seconds: float   # traditional select+label, per item
    human_box_seconds: float    # box-only, per item
    wage_per_hour: float
    api_cost_per_item: float

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "human_full_seconds": self.human_full_seconds,
            "human_box_seconds": self.human_box_seconds,
            "wage_per_hour": self.wage_per_hour,
            "api_cost_per_item": self.api_cost_per_item,
        }


@dataclass(frozen=True)
class CostReport:
    human_only_cost: float
    assisted_human_cost: float
    api_cost: float
    assisted_total: float
    savings: float
    roi: Optional[float]  # savings / assisted_total; absent when total is zero

    def to_dict(self) -> dict:
        return {
            "human_only_cost": self.human_only_cost,
            "assisted_human_cost": self.assisted_human_cost,
            "api_cost": self.api_cost,
            "assisted_total": self.assisted_total,
            "savings": self.savings,
            "roi": self.roi,
        }


def cost_roi(params: CostParams) -> CostReport:
    """Labor-vs-API trade-off for a batch of n items.

    human_only   = n * full_seconds/3600 * wage
    assisted     = n * box_seconds/3600 * wage + n * api_cost_per_item
    savings      = human_only - assisted
    roi          = savings / assisted (absent when assisted is zero)

    Raises:
        NegativeParamError: any parameter below zero.
    """
    for name, value in params.to_dict().items():
        if value < 0:
            raise NegativeParamError(f"{name} must be >= 0, got {value}")
    n = params.n_items
    human_only = n * params.human_full_seconds / 3600.0 * params.wage_per_hour
    assisted_human = n * params.human_box_seconds / 3600.0 * params.wage_per_hour
    api = n * params.api_cost_per_item
    assisted_total = assisted_human + api
    savings = human_only - assisted_total
    roi = savings / assisted_total if assisted_total > 0 else None
    return CostReport(
        human_only_cost=human_only,
        assisted_human_cost=assisted_human,
        api_cost=api,
        assisted_total=assisted_total,
        savings=savings,
        roi=roi,
    )


def render_accuracy_text(
    report: AccuracyReport, matrix: Optional[ConfusionMatrix] = None
) -> str:
    """Human-readable evaluation report (also the CLI output).

    Scoring happens post-normalization of both prediction and truth; the
    header says so because raw provider text is never compared directly.
    """
    lines = ["# scoring: normalized labels (casefold/trim/punctuation/synonyms)"]
    lines.append(f"accuracy: {report.display}% ({report.correct}/{report.total})")
    if report.unlabeled:
        lines.append(f"unlabeled (counted as misses): {report.unlabeled}")
    if report.per_class:
        lines.append("")
        lines.append("per-class:")
        width = max(len(name) for name in report.per_class)
        for name in sorted(report.per_class):
            t, c = report.per_class[name]
            lines.append(f"  {name.ljust(width)}  {c}/{t}  ({percent_display(c, t)}%)")
    if matrix is not None and matrix.columns:
        lines.append("")
        lines.append("confusion (rows=actual, cols=predicted):")
        label_w = max(len(c) for c in matrix.columns + matrix.classes)
        header = " ".join(col.rjust(label_w) for col in matrix.columns)
        lines.append(f"  {' ' * label_w} {header}")
        for actual in matrix.classes:
            row = " ".join(str(n).rjust(label_w) for n in matrix.row(actual))
            lines.append(f"  {actual.ljust(label_w)} {row}")
    return "\n".join(lines) + "\n"


def render_cost_text(params: CostParams, report: CostReport) -> str:
    lines = [
        f"items: {params.n_items}",
        f"human-only cost:     {money_display(report.human_only_cost)}",
        f"assisted human cost: {money_display(report.assisted_human_cost)}",
        f"api cost:            {money_display(report.api_cost)}",
        f"assisted total:      {money_display(report.assisted_total)}",
        f"savings:             {money_display(report.savings)}",
    ]
    if report.roi is None:
        lines.append("roi:                 n/a")
    else:
        lines.append(f"roi:                 {report.roi:.4f}")
    return "\n".join(lines) + "\n"
