"""Independence, separation and sufficiency gaps between two groups.

Gaps are signed differences ``group_a - group_b`` of the relevant conditional
probabilities.  A component whose conditional probability is undefined on
either side (zero denominator) is ``None`` and makes that component
not evaluable.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import OutcomeTable
from .errors import ConfigError, DomainError
from .metrics import METRIC_NAMES, ConfusionMatrix, accuracy_metrics, confusion_by_group, confusion_matrix

Gap = float | None

INDEPENDENCE_TOL = 1e-9


class Verdict(str, enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    NOT_EVALUABLE = "not-evaluable"

    @property
    def label(self) -> str:
        return {"satisfied": "Yes", "violated": "No", "not-evaluable": "n/a"}[self.value]


class FourFifths(str, enum.Enum):
    ADVERSE_IMPACT = "adverse-impact-evidence"
    NO_EVIDENCE = "no-evidence"
    NOT_EVALUABLE = "not-evaluable"


@dataclass(frozen=True)
class FairnessConfig:
    epsilon: float = 0.1
    four_fifths_threshold: float = 0.8
    comparison_mode: str = "absolute-difference"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 < self.four_fifths_threshold <= 1.0:
            raise ConfigError(f"four_fifths_threshold must lie in (0, 1], got {self.four_fifths_threshold}")
        if self.comparison_mode not in ("absolute-difference", "ratio"):
            raise ConfigError(f"comparison_mode must be 'absolute-difference' or 'ratio', got {self.comparison_mode!r}")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "four_fifths_threshold": self.four_fifths_threshold,
            "comparison_mode": self.comparison_mode,
        }


def _diff(a: float | None, b: float | None) -> Gap:
    if a is None or b is None:
        return None
    return a - b


def independence_gap(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> Gap:
    """P(pred=+ | a) - P(pred=+ | b)."""
    return _diff(cm_a.selection_rate(), cm_b.selection_rate())


def separation_gaps(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> tuple[Gap, Gap]:
    """(sensitivity gap, false-positive-rate gap)."""
    pa, pb = cm_a.positives, cm_b.positives
    na, nb = cm_a.negatives, cm_b.negatives
    tpr = _diff(cm_a.tp / pa if pa > 0 else None, cm_b.tp / pb if pb > 0 else None)
    fpr = _diff(1.0 - cm_a.tn / na if na > 0 else None, 1.0 - cm_b.tn / nb if nb > 0 else None)
    return tpr, fpr


def sufficiency_gaps(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> tuple[Gap, Gap]:
    """(precision gap, gap in P(truth=+ | pred=-) i.e. 1 - NPV)."""
    ha, hb = cm_a.predicted_positive, cm_b.predicted_positive
    la, lb = cm_a.predicted_negative, cm_b.predicted_negative
    ppv = _diff(cm_a.tp / ha if ha > 0 else None, cm_b.tp / hb if hb > 0 else None)
    fomr = _diff(1.0 - cm_a.tn / la if la > 0 else None, 1.0 - cm_b.tn / lb if lb > 0 else None)
    return ppv, fomr


def _criterion_rates(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> dict[str, list[tuple]]:
    """The conditional probabilities each criterion compares, per component."""
    def r(num, den):
        return num / den if den > 0 else None

    def pair(fn):
        return fn(cm_a), fn(cm_b)

    return {
        "independence": [pair(lambda c: c.selection_rate())],
        "separation": [
            pair(lambda c: r(c.tp, c.positives)),
            pair(lambda c: r(c.fp, c.negatives)),
        ],
        "sufficiency": [
            pair(lambda c: r(c.tp, c.predicted_positive)),
            pair(lambda c: r(c.fn, c.predicted_negative)),
        ],
    }


def ratio_disparity(rate_a: float | None, rate_b: float | None) -> Gap:
    """``1 - min/max`` of two rates; 0 when both are 0."""
    if rate_a is None or rate_b is None:
        return None
    hi = max(rate_a, rate_b)
    return 0.0 if hi == 0 else 1.0 - min(rate_a, rate_b) / hi


def evaluate_criterion(gaps: Gap | Sequence[Gap], config: FairnessConfig | None = None) -> Verdict:
    """Verdict for one criterion.

    Violated if any evaluable ``|gap| > epsilon``; otherwise not-evaluable if
    any component is ``None``; otherwise satisfied.  ``|gap| == epsilon``
    counts as satisfied.
    """
    eps = (config or FairnessConfig()).epsilon
    if gaps is None or isinstance(gaps, (int, float)):
        gaps = (gaps,)
    values = [g for g in gaps if g is not None]
    if any(abs(g) > eps for g in values):
        return Verdict.VIOLATED
    if len(values) < len(gaps):
        return Verdict.NOT_EVALUABLE
    return Verdict.SATISFIED


def four_fifths_test(selection_rates: Mapping[str, float | None], threshold: float = 0.8) -> FourFifths:
    rates = [r for r in selection_rates.values() if r is not None]
    for r in rates:
        if not 0.0 <= r <= 1.0:
            raise DomainError(f"selection rate {r} outside [0, 1]")
    if len(rates) < 2:
        return FourFifths.NOT_EVALUABLE
    if min(rates) < threshold * max(rates):
        return FourFifths.ADVERSE_IMPACT
    return FourFifths.NO_EVIDENCE


# --------------------------------------------------------------------------
# Incompatibility advisories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Advisory:
    criteria: tuple[str, ...]
    precondition: str
    message: str
    suppressed: bool = False

    def to_dict(self) -> dict:
        return {
            "criteria": list(self.criteria),
            "precondition": self.precondition,
            "message": self.message,
            "suppressed": self.suppressed,
        }


_PROPOSITIONS = (
    (
        ("independence", "sufficiency"),
        "group is not independent of the true label",
    ),
    (
        ("independence", "separation"),
        "true label is binary, group is not independent of the true label, "
        "and the prediction is not independent of the true label",
    ),
    (
        ("separation", "sufficiency"),
        "group is not independent of the true label and every (group, label, prediction) cell has positive probability",
    ),
)


def _is_independent(joint: np.ndarray, tol: float) -> bool:
    """Whether a 2-D joint frequency table factorises into its marginals."""
    joint = joint / joint.sum()
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    return bool(np.all(np.abs(joint - outer) <= tol))


def _joint(cms: Mapping[str, ConfusionMatrix]) -> np.ndarray:
    """Array indexed [group, truth(+,-), prediction(+,-)]."""
    return np.array([[[cm.tp, cm.fn], [cm.fp, cm.tn]] for cm in cms.values()], dtype=np.float64)


def incompatibility_advisories(source: OutcomeTable | Mapping[str, ConfusionMatrix],
                               tol: float = INDEPENDENCE_TOL) -> list[Advisory]:
    """Criterion pairs that cannot both hold exactly on this data.

    Accepts a table or per-group confusion matrices (which carry the full
    joint distribution of group, label and prediction).  Degenerate inputs
    give a single suppressed advisory naming the reason.
    """
    cms = confusion_by_group(source) if isinstance(source, OutcomeTable) else dict(source)
    cms = {g: cm for g, cm in cms.items() if cm.total > 0}
    if len(cms) < 2:
        return [Advisory((), "", "advisories suppressed: fewer than two groups", suppressed=True)]
    joint = _joint(cms)
    label_totals = joint.sum(axis=(0, 2))
    if np.any(label_totals <= 0):
        return [Advisory((), "", "advisories suppressed: only one true-label class present", suppressed=True)]

    group_dep_label = not _is_independent(joint.sum(axis=2), tol)
    pred_dep_label = not _is_independent(joint.sum(axis=0), tol)
    all_cells_positive = bool(np.all(joint > 0))
    holds = (
        group_dep_label,
        group_dep_label and pred_dep_label,
        group_dep_label and all_cells_positive,
    )
    out = []
    for (pair, pre), ok in zip(_PROPOSITIONS, holds):
        if ok:
            out.append(Advisory(pair, pre, f"{pair[0]} and {pair[1]} cannot both hold exactly: {pre}"))
    return out


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

def _gap_entry(g: Gap) -> dict:
    return {"signed": g, "abs": None if g is None else abs(g)}


@dataclass
class FairnessReport:
    group_pair: tuple[str, str]
    config: FairnessConfig
    panels: dict[str, ConfusionMatrix]
    independence_gap: Gap
    separation_gaps: tuple[Gap, Gap]
    sufficiency_gaps: tuple[Gap, Gap]
    verdicts: dict[str, Verdict]
    selection_rates: dict[str, float | None]
    four_fifths: FourFifths
    advisories: list[Advisory] = field(default_factory=list)
    fingerprint: str | None = None

    def to_dict(self) -> dict:
        a, b = self.group_pair
        return {
            "group_pair": [a, b],
            "config": self.config.to_dict(),
            "dataset_fingerprint": self.fingerprint,
            "confusion_matrices": {k: cm.to_dict() for k, cm in self.panels.items()},
            "accuracy_metrics": {k: accuracy_metrics(cm).to_dict() for k, cm in self.panels.items()},
            "selection_rates": self.selection_rates,
            "gaps": {
                "independence": _gap_entry(self.independence_gap),
                "separation": {
                    "sensitivity": _gap_entry(self.separation_gaps[0]),
                    "fp_rate": _gap_entry(self.separation_gaps[1]),
                },
                "sufficiency": {
                    "precision": _gap_entry(self.sufficiency_gaps[0]),
                    "one_minus_npv": _gap_entry(self.sufficiency_gaps[1]),
                },
            },
            "verdicts": {k: v.value for k, v in self.verdicts.items()},
            "four_fifths": self.four_fifths.value,
            "advisories": [adv.to_dict() for adv in self.advisories],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def audit_confusions(cms: Mapping[str, ConfusionMatrix], pair: tuple[str, str],
                     config: FairnessConfig | None = None, *, overall: ConfusionMatrix | None = None,
                     fingerprint: str | None = None) -> FairnessReport:
    """Build a report for ``pair`` from per-group confusion matrices.

    ``overall`` is the un-partitioned matrix (the "all" panel); when omitted it
    is the sum of every group in ``cms``.
    """
    config = config or FairnessConfig()
    a, b = pair
    for g in pair:
        if g not in cms:
            raise DomainError(f"group {g!r} not present; available: {sorted(cms)}")
    cm_a, cm_b = cms[a], cms[b]
    if overall is None:
        overall = ConfusionMatrix(0, 0, 0, 0)
        for cm in cms.values():
            overall = overall + cm
    ind = independence_gap(cm_a, cm_b)
    sep = separation_gaps(cm_a, cm_b)
    suf = sufficiency_gaps(cm_a, cm_b)
    rates = {a: cm_a.selection_rate(), b: cm_b.selection_rate()}
    if config.comparison_mode == "ratio":
        verdicts = {
            name: evaluate_criterion([ratio_disparity(ra, rb) for ra, rb in comps], config)
            for name, comps in _criterion_rates(cm_a, cm_b).items()
        }
    else:
        verdicts = {
            "independence": evaluate_criterion(ind, config),
            "separation": evaluate_criterion(sep, config),
            "sufficiency": evaluate_criterion(suf, config),
        }
    return FairnessReport(
        group_pair=(a, b),
        config=config,
        panels={"all": overall, a: cm_a, b: cm_b},
        independence_gap=ind,
        separation_gaps=sep,
        sufficiency_gaps=suf,
        verdicts=verdicts,
        selection_rates=rates,
        four_fifths=four_fifths_test(rates, config.four_fifths_threshold),
        advisories=incompatibility_advisories({a: cm_a, b: cm_b}),
        fingerprint=fingerprint,
    )


def audit(table: OutcomeTable, pair: tuple[str, str], config: FairnessConfig | None = None) -> FairnessReport:
    """Report for an explicit group pair.  Rows of other groups count toward
    the "all" panel only."""
    cms = confusion_by_group(table)
    return audit_confusions(cms, pair, config, overall=confusion_matrix(table), fingerprint=table.fingerprint())


def audit_all_pairs(table: OutcomeTable, config: FairnessConfig | None = None) -> list[FairnessReport]:
    cms = confusion_by_group(table)
    overall = confusion_matrix(table)
    fp = table.fingerprint()
    return [
        audit_confusions(cms, pair, config, overall=overall, fingerprint=fp)
        for pair in itertools.combinations(sorted(cms), 2)
    ]


_METRIC_LABELS = {
    "predictive_accuracy": "Predictive accuracy",
    "balanced_accuracy": "Balanced accuracy",
    "sensitivity": "Sensitivity = TP rate",
    "specificity": "Specificity = TN rate",
    "precision": "Precision = PPV",
    "npv": "NPV",
    "fp_rate": "FP rate = 1 - specificity",
    "fn_rate": "FN rate = 1 - sensitivity",
}


def _fmt(v: float | None) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.4f}"


def render_table(report: FairnessReport) -> str:
    """Plain-text three-panel layout: confusion matrices, accuracy metrics,
    fairness determinations."""
    a, b = report.group_pair
    names = list(report.panels)
    eps = report.config.epsilon
    lines = ["b. Confusion matrix (positive = predicted high)", ""]
    lines.append("".join(f"{n:<32}" for n in names).rstrip())
    lines.append("".join(f"{'':<12}{'High':>8}{'Low':>8}    " for _ in names).rstrip())
    for label, pos_attr, neg_attr in (("Recidivated", "tp", "fn"), ("Survived", "fp", "tn")):
        row = ""
        for n in names:
            cm = report.panels[n]
            row += f"{label:<12}{_count(getattr(cm, pos_attr)):>8}{_count(getattr(cm, neg_attr)):>8}    "
        lines.append(row.rstrip())
    lines += ["", "c. Accuracy metrics", ""]
    metrics = {n: accuracy_metrics(report.panels[n]).to_dict() for n in names}
    lines.append(f"{'':<28}" + "".join(f"{n:>12}" for n in names))
    for key in METRIC_NAMES:
        lines.append(f"{_METRIC_LABELS[key]:<28}" + "".join(f"{_fmt(metrics[n][key]):>12}" for n in names))

    def cmp(g: Gap) -> str:
        if g is None:
            return "not evaluable"
        return f"{_fmt(g)} {'>' if abs(g) > eps else '<='} eps"

    v = report.verdicts
    sa, sb = report.selection_rates[a], report.selection_rates[b]
    lines += ["", "d. Fairness metrics", ""]
    lines.append(f"(i) Independence: {v['independence'].label} if eps = {eps:g}")
    lines.append(f"    P(High|{a}) - P(High|{b}) = {_fmt(sa)} - {_fmt(sb)} = {cmp(report.independence_gap)}")
    lines.append(f"(ii) Separation: {v['separation'].label} if eps = {eps:g}")
    lines.append(f"    Sensitivity gap = {cmp(report.separation_gaps[0])}")
    lines.append(f"    FP rate gap = {cmp(report.separation_gaps[1])}")
    lines.append(f"(iii) Sufficiency: {v['sufficiency'].label} if eps = {eps:g}")
    lines.append(f"    Precision gap = {cmp(report.sufficiency_gaps[0])}")
    lines.append(f"    (1 - NPV) gap = {cmp(report.sufficiency_gaps[1])}")
    lines.append("")
    lines.append(f"Four-fifths rule (threshold {report.config.four_fifths_threshold:g}): {report.four_fifths.value}")
    for adv in report.advisories:
        lines.append(f"Advisory: {adv.message}")
    return "\n".join(lines) + "\n"
