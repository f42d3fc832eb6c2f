"""Group-fairness auditing toolkit with COMPAS Table 5 replication and
gaming / embedding-stereotype simulations."""
from __future__ import annotations

__version__ = "0.1.0"

from .dataset import CompasRecipe, OutcomeRecord, OutcomeTable, Schema, binarize_score, load_outcomes, partition_by_group
from .errors import FairAuditError
from .fairness import (
    FairnessConfig,
    FairnessReport,
    FourFifths,
    Verdict,
    audit,
    evaluate_criterion,
    four_fifths_test,
    incompatibility_advisories,
    independence_gap,
    separation_gaps,
    sufficiency_gaps,
)
from .metrics import AccuracyMetrics, ConfusionMatrix, accuracy_metrics, confusion_matrix

__all__ = [
    "AccuracyMetrics",
    "CompasRecipe",
    "ConfusionMatrix",
    "FairAuditError",
    "FairnessConfig",
    "FairnessReport",
    "FourFifths",
    "OutcomeRecord",
    "OutcomeTable",
    "Schema",
    "Verdict",
    "accuracy_metrics",
    "audit",
    "binarize_score",
    "confusion_matrix",
    "evaluate_criterion",
    "four_fifths_test",
    "incompatibility_advisories",
    "independence_gap",
    "load_outcomes",
    "partition_by_group",
    "separation_gaps",
    "sufficiency_gaps",
]
