"""Confusion matrices and the accuracy battery derived from them.

Rates with a zero denominator are ``None`` (serialised as JSON ``null``),
never 0 and never an exception.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .dataset import OutcomeTable
from .errors import DomainError, EmptyDatasetError

METRIC_NAMES = (
    "predictive_accuracy",
    "balanced_accuracy",
    "sensitivity",
    "specificity",
    "precision",
    "npv",
    "fp_rate",
    "fn_rate",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: float
    fp: float
    fn: float
    tn: float

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be a finite non-negative count, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def positives(self) -> float:
        return self.tp + self.fn

    @property
    def negatives(self) -> float:
        return self.fp + self.tn

    @property
    def predicted_positive(self) -> float:
        return self.tp + self.fp

    @property
    def predicted_negative(self) -> float:
        return self.fn + self.tn

    def selection_rate(self) -> float | None:
        return _ratio(self.predicted_positive, self.total)

    def base_rate(self) -> float | None:
        return _ratio(self.positives, self.total)

    def scaled(self, alpha: float) -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp * alpha, self.fp * alpha, self.fn * alpha, self.tn * alpha)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class AccuracyMetrics:
    predictive_accuracy: float | None
    balanced_accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    precision: float | None
    npv: float | None
    fp_rate: float | None
    fn_rate: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def rounded(self, ndigits: int = 4) -> dict:
        return {k: (None if v is None else round(v, ndigits)) for k, v in asdict(self).items()}


def confusion_matrix(table: OutcomeTable) -> ConfusionMatrix:
    table.require_nonempty()
    counts = kernels.grouped_confusion(
        np.zeros(len(table), dtype=np.int64), 1, table.truth, table.prediction, table.weight
    )[0]
    return ConfusionMatrix(*counts)


def confusion_by_group(table: OutcomeTable) -> dict[str, ConfusionMatrix]:
    """One matrix per group in the table's domain (groups with no rows omitted)."""
    table.require_nonempty()
    counts = kernels.grouped_confusion(table.codes, len(table.domain), table.truth, table.prediction, table.weight)
    return {g: ConfusionMatrix(*row) for g, row in zip(table.domain, counts) if row.sum() > 0}


def accuracy_metrics(cm: ConfusionMatrix) -> AccuracyMetrics:
    if cm.total <= 0:
        raise EmptyDatasetError("confusion matrix has zero total")
    sens = _ratio(cm.tp, cm.positives)
    spec = _ratio(cm.tn, cm.negatives)
    balanced = (sens + spec) / 2 if sens is not None and spec is not None else None
    return AccuracyMetrics(
        predictive_accuracy=(cm.tp + cm.tn) / cm.total,
        balanced_accuracy=balanced,
        sensitivity=sens,
        specificity=spec,
        precision=_ratio(cm.tp, cm.predicted_positive),
        npv=_ratio(cm.tn, cm.predicted_negative),
        fp_rate=None if spec is None else 1.0 - spec,
        fn_rate=None if sens is None else 1.0 - sens,
    )
