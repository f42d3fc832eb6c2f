"""Classifier-outcome tables: ingestion, validation and group partitioning."""
from __future__ import annotations

import csv
import gzip
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DomainError, EmptyDatasetError, RowError, SchemaError

POSITIVE_TOKENS = frozenset({"1", "1.0", "true", "t", "yes", "y", "+", "pos", "positive", "high"})
NEGATIVE_TOKENS = frozenset({"0", "0.0", "false", "f", "no", "n", "-", "neg", "negative", "low"})

SCORE_MIN, SCORE_MAX = 1, 10


@dataclass(frozen=True)
class OutcomeRecord:
    truth: bool
    prediction: bool
    group: str
    weight: float = 1.0

    def __post_init__(self):
        if not isinstance(self.truth, (bool, np.bool_)) or not isinstance(self.prediction, (bool, np.bool_)):
            raise DomainError("truth and prediction must be booleans")
        if not self.weight > 0:
            raise DomainError(f"weight must be > 0, got {self.weight!r}")


@dataclass(frozen=True)
class Schema:
    """Column mapping used at ingestion.

    Exactly one of ``prediction`` (binary column) or ``score`` (raw 1..10
    score, binarised at ``score_cutoff``) must be given.
    """

    truth: str
    group: str
    prediction: str | None = None
    score: str | None = None
    weight: str | None = None
    score_cutoff: int = 5

    def __post_init__(self):
        if (self.prediction is None) == (self.score is None):
            raise SchemaError("prediction|score", "schema needs exactly one of a prediction or a score column")

    def columns(self) -> list[str]:
        cols = [self.truth, self.prediction or self.score, self.group]
        if self.weight:
            cols.append(self.weight)
        return cols

    def to_dict(self) -> dict:
        return {
            "truth": self.truth,
            "group": self.group,
            "prediction": self.prediction,
            "score": self.score,
            "weight": self.weight,
            "score_cutoff": self.score_cutoff,
        }


@dataclass(frozen=True)
class CompasRecipe:
    """How the ProPublica two-year file is turned into outcome records.

    The default applies no row filters: Table 5b's panels add up to the full
    7214-row file (3696 African-American, 2454 Caucasian).  ``propublica()``
    gives the filter set from ProPublica's own notebook, which keeps 6172 rows.
    """

    score_cutoff: int = 5
    screening_window_days: tuple[int, int] | None = None
    excluded_score_texts: frozenset[str] = frozenset()
    recidivism_horizon: str = "two_year_recid"
    score_column: str = "decile_score"
    group_column: str = "race"
    screening_column: str = "days_b_screening_arrest"
    score_text_column: str = "score_text"
    group_labels: Mapping[str, str] = field(
        default_factory=lambda: {"African-American": "black", "Caucasian": "white"}
    )

    def __post_init__(self):
        if not SCORE_MIN <= self.score_cutoff <= SCORE_MAX + 1:
            raise DomainError(f"score_cutoff must lie in {SCORE_MIN}..{SCORE_MAX + 1}")
        object.__setattr__(self, "excluded_score_texts", frozenset(self.excluded_score_texts))

    @classmethod
    def propublica(cls) -> "CompasRecipe":
        return cls(screening_window_days=(-30, 30), excluded_score_texts=frozenset({"N/A"}))

    def schema(self) -> Schema:
        return Schema(
            truth=self.recidivism_horizon,
            group=self.group_column,
            score=self.score_column,
            score_cutoff=self.score_cutoff,
        )

    def filter_columns(self) -> list[str]:
        cols = []
        if self.screening_window_days is not None:
            cols.append(self.screening_column)
        if self.excluded_score_texts:
            cols.append(self.score_text_column)
        return cols

    def admits(self, row: Mapping[str, str]) -> bool:
        if self.screening_window_days is not None:
            lo, hi = self.screening_window_days
            raw = row[self.screening_column].strip()
            try:
                days = float(raw)
            except ValueError:
                return False
            if not lo <= days <= hi:
                return False
        if self.excluded_score_texts and row[self.score_text_column].strip() in self.excluded_score_texts:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "score_cutoff": self.score_cutoff,
            "screening_window_days": list(self.screening_window_days) if self.screening_window_days else None,
            "excluded_score_texts": sorted(self.excluded_score_texts),
            "recidivism_horizon": self.recidivism_horizon,
            "score_column": self.score_column,
            "group_column": self.group_column,
            "group_labels": dict(sorted(self.group_labels.items())),
        }


def binarize_score(raw: int, cutoff: int = 5) -> bool:
    """High-risk (positive) iff ``raw >= cutoff``; raw must be a 1..10 score."""
    if isinstance(raw, bool) or int(raw) != raw or not SCORE_MIN <= raw <= SCORE_MAX:
        raise DomainError(f"score {raw!r} outside {SCORE_MIN}..{SCORE_MAX}")
    return raw >= cutoff


def parse_binary(token: str) -> bool:
    t = token.strip().lower()
    if t in POSITIVE_TOKENS:
        return True
    if t in NEGATIVE_TOKENS:
        return False
    raise ValueError(f"not a binary label: {token!r}")


class OutcomeTable:
    """Immutable columnar table of (truth, prediction, group, weight).

    Groups are stored as integer codes into ``domain``, a sorted tuple of
    group strings, so row order never affects the domain.
    """

    def __init__(self, truth, prediction, groups: Iterable[str], weight=None, *, schema: Mapping | None = None,
                 rejected: int = 0, domain: Iterable[str] | None = None):
        truth = np.asarray(truth, dtype=np.bool_).copy()
        prediction = np.asarray(prediction, dtype=np.bool_).copy()
        groups = [str(g) for g in groups]
        n = truth.shape[0]
        if prediction.shape != (n,) or len(groups) != n:
            raise ValueError("column lengths differ")
        weight = np.ones(n) if weight is None else np.asarray(weight, dtype=np.float64).copy()
        if weight.shape != (n,):
            raise ValueError("weight column length differs")
        if n and not np.all(weight > 0):
            raise DomainError("weights must be > 0")
        dom = tuple(sorted(set(groups))) if domain is None else tuple(sorted(set(domain)))
        index = {g: i for i, g in enumerate(dom)}
        try:
            codes = np.fromiter((index[g] for g in groups), dtype=np.int64, count=n)
        except KeyError as exc:
            raise DomainError(f"group {exc.args[0]!r} not in declared domain {dom}") from None
        for arr in (truth, prediction, weight, codes):
            arr.setflags(write=False)
        self.truth = truth
        self.prediction = prediction
        self.weight = weight
        self.codes = codes
        self.domain = dom
        self.schema = dict(schema or {})
        self.rejected = rejected

    @classmethod
    def from_records(cls, records: Iterable[OutcomeRecord], **kwargs) -> "OutcomeTable":
        records = list(records)
        return cls(
            [r.truth for r in records],
            [r.prediction for r in records],
            [r.group for r in records],
            [r.weight for r in records],
            **kwargs,
        )

    def __len__(self) -> int:
        return int(self.truth.shape[0])

    def __iter__(self) -> Iterator[OutcomeRecord]:
        return self.records()

    def records(self) -> Iterator[OutcomeRecord]:
        for t, p, c, w in zip(self.truth, self.prediction, self.codes, self.weight):
            yield OutcomeRecord(bool(t), bool(p), self.domain[c], float(w))

    @property
    def groups(self) -> np.ndarray:
        return np.asarray(self.domain, dtype=object)[self.codes]

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    def subset(self, mask) -> "OutcomeTable":
        mask = np.asarray(mask)
        return OutcomeTable(
            self.truth[mask],
            self.prediction[mask],
            list(self.groups[mask]),
            self.weight[mask],
            schema=self.schema,
        )

    def require_nonempty(self) -> None:
        if len(self) == 0:
            raise EmptyDatasetError("outcome table is empty")

    def group_sizes(self) -> dict[str, int]:
        counts = np.bincount(self.codes, minlength=len(self.domain))
        return {g: int(c) for g, c in zip(self.domain, counts)}

    def to_csv_bytes(self) -> bytes:
        """Canonical serialisation; equal tables give equal bytes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["truth", "prediction", "group", "weight"])
        for r in self.records():
            w.writerow([int(r.truth), int(r.prediction), r.group, repr(r.weight)])
        header = json.dumps({"schema": self.schema, "domain": list(self.domain)}, sort_keys=True)
        return (f"# {header}\n" + buf.getvalue()).encode("utf-8")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_csv_bytes()).hexdigest()

    def __repr__(self) -> str:
        return f"OutcomeTable(n={len(self)}, groups={self.group_sizes()})"


def partition_by_group(table: OutcomeTable) -> dict[str, OutcomeTable]:
    table.require_nonempty()
    parts = {}
    for code, g in enumerate(table.domain):
        mask = table.codes == code
        if mask.any():
            parts[g] = table.subset(mask)
    return parts


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def load_outcomes(path, schema: Schema | None = None, recipe: CompasRecipe | None = None,
                  delimiter: str = ",") -> OutcomeTable:
    """Read a delimited text file with a header row into an :class:`OutcomeTable`.

    With a ``recipe`` and no ``schema`` the recipe's schema is used, its row
    filters are applied, and group values are relabelled through
    ``recipe.group_labels``.  Rejected rows are counted in ``table.rejected``.
    """
    path = Path(path)
    if schema is None:
        if recipe is None:
            raise SchemaError("truth", "either a schema or a recipe is required")
        schema = recipe.schema()
    labels = dict(recipe.group_labels) if recipe is not None else {}

    truth, pred, groups, weight = [], [], [], []
    rejected = 0
    with _open_text(path) as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: no header row") from None
        header = [h.strip() for h in header]
        if header and header[0].startswith("\ufeff"):
            header[0] = header[0][1:]
        needed = schema.columns() + (recipe.filter_columns() if recipe else [])
        for col in needed:
            if col not in header:
                raise SchemaError(col)
        pos = {name: i for i, name in enumerate(header)}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise RowError(line, f"expected {len(header)} fields, found {len(row)}")
            if recipe is not None and not recipe.admits({c: row[pos[c]] for c in recipe.filter_columns()}):
                rejected += 1
                continue
            try:
                t = parse_binary(row[pos[schema.truth]])
                if schema.prediction is not None:
                    p = parse_binary(row[pos[schema.prediction]])
                else:
                    raw = row[pos[schema.score]].strip()
                    p = binarize_score(int(raw), schema.score_cutoff)
                w = float(row[pos[schema.weight]]) if schema.weight else 1.0
                if not w > 0:
                    raise ValueError(f"weight must be > 0, got {w}")
            except ValueError as exc:
                raise RowError(line, str(exc)) from None
            g = row[pos[schema.group]].strip()
            truth.append(t)
            pred.append(p)
            groups.append(labels.get(g, g))
            weight.append(w)
    if not truth:
        raise EmptyDatasetError(f"{path}: no usable data rows")
    meta = {"source": path.name, "schema": schema.to_dict()}
    if recipe is not None:
        meta["recipe"] = recipe.to_dict()
    return OutcomeTable(truth, pred, groups, weight, schema=meta, rejected=rejected)
