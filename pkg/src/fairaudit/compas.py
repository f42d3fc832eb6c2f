"""COMPAS Table 5 replication: bundled count fixture, printed values, checks."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dataset import CompasRecipe, load_outcomes
from .errors import IntegrityError
from .fairness import FairnessConfig, FairnessReport, Verdict, audit_confusions
from .metrics import ConfusionMatrix, accuracy_metrics, confusion_by_group, confusion_matrix

FIXTURE_NAME = "table5b_counts.txt"
PANELS = ("all", "black", "white")
PAIR = ("black", "white")
TOLERANCE = 5e-4

# Values as printed (4 decimals).
PRINTED_METRICS = {
    "predictive_accuracy": {"all": 0.6537, "black": 0.6383, "white": 0.6699},
    "balanced_accuracy": {"all": 0.6512, "black": 0.6358, "white": 0.6441},
    "sensitivity": {"all": 0.6260, "black": 0.7201, "white": 0.5228},
    "specificity": {"all": 0.6765, "black": 0.5515, "white": 0.7655},
    "precision": {"all": 0.6135, "black": 0.6297, "white": 0.5913},
    "npv": {"all": 0.6880, "black": 0.6505, "white": 0.7119},
    "fp_rate": {"all": 0.3235, "black": 0.4485, "white": 0.2345},
    "fn_rate": {"all": 0.3740, "black": 0.2799, "white": 0.4772},
}
PRINTED_RATES = {
    "selection_rate_black": 0.5882,
    "selection_rate_white": 0.3480,
    "one_minus_npv_black": 0.3495,
    "one_minus_npv_white": 0.2881,
}
PRINTED_GAPS = {
    "independence": 0.2402,
    "separation_sensitivity": 0.1974,
    "separation_fp_rate": 0.2139,
    "sufficiency_precision": 0.0384,
    "sufficiency_one_minus_npv": 0.0614,
}
PRINTED_VERDICTS = {
    "independence": Verdict.VIOLATED,
    "separation": Verdict.VIOLATED,
    "sufficiency": Verdict.SATISFIED,
}


def format_fixture(counts: dict[str, ConfusionMatrix], cutoff: int = 5) -> str:
    """Serialise counts with a trailing sha256 line over everything above it."""
    body = [
        "# COMPAS confusion counts, two-year recidivism, positive = decile score >= cutoff",
        f"# cutoff={cutoff}",
        "group tp fn fp tn",
    ]
    for g, cm in counts.items():
        body.append(f"{g} {int(cm.tp)} {int(cm.fn)} {int(cm.fp)} {int(cm.tn)}")
    text = "\n".join(body) + "\n"
    return text + f"sha256 {hashlib.sha256(text.encode()).hexdigest()}\n"


def default_fixture_path() -> Path:
    return Path(str(resources.files("fairaudit") / "data" / FIXTURE_NAME))


def load_count_fixture(path=None) -> dict[str, ConfusionMatrix]:
    """Parse and checksum-verify a count fixture.  Raises ``IntegrityError``."""
    path = Path(path) if path is not None else default_fixture_path()
    raw = path.read_text(encoding="utf-8")
    lines = raw.splitlines(keepends=True)
    if not lines or not lines[-1].startswith("sha256 "):
        raise IntegrityError(f"{path}: missing sha256 line")
    body = "".join(lines[:-1])
    expected = lines[-1].split()[1].strip()
    if hashlib.sha256(body.encode()).hexdigest() != expected:
        raise IntegrityError(f"{path}: checksum mismatch")
    counts = {}
    for line in body.splitlines():
        if not line.strip() or line.startswith("#") or line.startswith("group "):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise IntegrityError(f"{path}: malformed count line {line!r}")
        g, tp, fn, fp, tn = parts
        counts[g] = ConfusionMatrix(tp=float(tp), fp=float(fp), fn=float(fn), tn=float(tn))
    missing = [p for p in PANELS if p not in counts]
    if missing:
        raise IntegrityError(f"{path}: fixture lacks panels {missing}")
    return counts


@dataclass(frozen=True)
class CellCheck:
    table: str
    name: str
    panel: str
    expected: float | str
    actual: float | str | None

    @property
    def passed(self) -> bool:
        if isinstance(self.expected, str):
            return self.expected == self.actual
        return self.actual is not None and abs(self.actual - self.expected) <= TOLERANCE

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "name": self.name,
            "panel": self.panel,
            "expected": self.expected,
            "actual": self.actual,
            "passed": self.passed,
        }


def report_from_counts(counts: dict[str, ConfusionMatrix], config: FairnessConfig | None = None,
                       fingerprint: str | None = None) -> FairnessReport:
    cms = {g: counts[g] for g in PAIR}
    return audit_confusions(cms, PAIR, config or FairnessConfig(epsilon=0.1), overall=counts["all"],
                            fingerprint=fingerprint)


def check_table5(counts: dict[str, ConfusionMatrix]) -> tuple[FairnessReport, list[CellCheck]]:
    """Compare every Table 5c cell and every Table 5d figure to the printed values."""
    report = report_from_counts(counts)
    checks = []
    for metric, by_panel in PRINTED_METRICS.items():
        for panel, expected in by_panel.items():
            actual = getattr(accuracy_metrics(counts[panel]), metric)
            checks.append(CellCheck("5c", metric, panel, expected, actual))
    b, w = counts["black"], counts["white"]
    rates = {
        "selection_rate_black": b.selection_rate(),
        "selection_rate_white": w.selection_rate(),
        "one_minus_npv_black": 1 - accuracy_metrics(b).npv,
        "one_minus_npv_white": 1 - accuracy_metrics(w).npv,
    }
    for name, expected in PRINTED_RATES.items():
        checks.append(CellCheck("5d", name, "black-white", expected, rates[name]))
    gaps = {
        "independence": report.independence_gap,
        "separation_sensitivity": report.separation_gaps[0],
        "separation_fp_rate": report.separation_gaps[1],
        "sufficiency_precision": report.sufficiency_gaps[0],
        "sufficiency_one_minus_npv": report.sufficiency_gaps[1],
    }
    for name, expected in PRINTED_GAPS.items():
        checks.append(CellCheck("5d", name, "black-white", expected, gaps[name]))
    for name, expected in PRINTED_VERDICTS.items():
        checks.append(CellCheck("5d", f"verdict_{name}", "black-white", expected.value, report.verdicts[name].value))
    return report, checks


@dataclass(frozen=True)
class CountDiff:
    panel: str
    cell: str
    expected: float
    actual: float | None

    def __str__(self) -> str:
        return f"{self.panel}.{self.cell}: expected {self.expected:g}, got {self.actual}"


def confusions_from_csv(path, recipe: CompasRecipe | None = None) -> dict[str, ConfusionMatrix]:
    """Per-panel confusion counts ("all" plus every relabelled group) from the raw CSV."""
    table = load_outcomes(path, recipe=recipe or CompasRecipe())
    out = {"all": confusion_matrix(table)}
    out.update(confusion_by_group(table))
    return out


def diff_counts(expected: dict[str, ConfusionMatrix], actual: dict[str, ConfusionMatrix]) -> list[CountDiff]:
    diffs = []
    for panel in PANELS:
        e = expected[panel]
        a = actual.get(panel)
        for cell in ("tp", "fn", "fp", "tn"):
            got = None if a is None else getattr(a, cell)
            if got != getattr(e, cell):
                diffs.append(CountDiff(panel, cell, getattr(e, cell), got))
    return diffs


def verify_csv(path, recipe: CompasRecipe | None = None, fixture=None) -> list[CountDiff]:
    """Run the CSV through ``recipe`` and diff its counts against the fixture."""
    expected = load_count_fixture(fixture)
    return diff_counts(expected, confusions_from_csv(path, recipe))
