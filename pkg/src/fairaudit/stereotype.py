"""Embedding stereotype scores, projection debiasing and decoding samplers.

A word's bias toward an attribute pair ``(left, right)`` is
``cos(w, left) - cos(w, right)``.  Word matching is exact and case-sensitive.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateDirectionError,
    DomainError,
    EmbeddingFormatError,
    EmptyReportError,
    UndefinedCosineError,
    WordLookupError,
)

log = logging.getLogger(__name__)


class EmbeddingTable:
    """Word to vector map with a fixed dimension.  Read-only after construction."""

    def __init__(self, words: Sequence[str], vectors, duplicates: int = 0):
        vectors = np.array(vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise EmbeddingFormatError("vectors must be a (n_words, dimension) array")
        if vectors.shape[0] == 0:
            raise EmbeddingFormatError("embedding table is empty")
        if len(set(words)) != len(words):
            raise EmbeddingFormatError("duplicate words in table")
        vectors.setflags(write=False)
        self.words = tuple(words)
        self.vectors = vectors
        self.index = {w: i for i, w in enumerate(self.words)}
        self.duplicates = duplicates

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def vector(self, word: str) -> np.ndarray:
        try:
            return self.vectors[self.index[word]]
        except KeyError:
            raise WordLookupError(word) from None

    def to_text(self) -> str:
        lines = [f"{len(self)} {self.dimension}"]
        for w, v in zip(self.words, self.vectors):
            lines.append(w + " " + " ".join(repr(float(x)) for x in v))
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        """Hash of the word-sorted table; invariant to row order."""
        h = hashlib.sha256()
        for i in sorted(range(len(self)), key=lambda i: self.words[i]):
            h.update(self.words[i].encode("utf-8") + b"\0")
            h.update(np.ascontiguousarray(self.vectors[i]).tobytes())
        return h.hexdigest()


def _parse_floats(tokens: list[str], line: int) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise EmbeddingFormatError("non-numeric vector component", line) from None


def load_embeddings(path) -> EmbeddingTable:
    """Read ``word v1 v2 ... vd`` lines; an optional ``count dim`` header is detected.

    Duplicate words: the last occurrence wins and ``table.duplicates`` counts
    the overwritten rows.
    """
    path = Path(path)
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            tokens = line.rstrip("\n").split()
            if tokens:
                rows.append((n, tokens))
    if not rows:
        raise EmbeddingFormatError(f"{path}: empty embedding file")

    declared_dim = None
    first_n, first = rows[0]
    if len(first) == 2 and all(t.isdigit() for t in first):
        width_ok = len(rows) == 1 or len(rows[1][1]) - 1 == int(first[1])
        # with dimension 1 the header is itself a valid data row; require the count to match
        if width_ok and (int(first[1]) != 1 or int(first[0]) == len(rows) - 1):
            declared_count, declared_dim = int(first[0]), int(first[1])
            rows = rows[1:]
            if declared_count != len(rows):
                log.warning("%s: header declares %d words, file has %d", path, declared_count, len(rows))
    if not rows:
        raise EmbeddingFormatError(f"{path}: header but no vectors")

    dim = declared_dim if declared_dim is not None else len(rows[0][1]) - 1
    if dim < 1:
        raise EmbeddingFormatError("line has a word but no vector", rows[0][0])
    vectors: dict[str, list[float]] = {}
    duplicates = 0
    for n, tokens in rows:
        if len(tokens) - 1 != dim:
            raise EmbeddingFormatError(f"expected {dim} components, found {len(tokens) - 1}", n)
        vec = _parse_floats(tokens[1:], n)
        if tokens[0] in vectors:
            duplicates += 1
            del vectors[tokens[0]]
        vectors[tokens[0]] = vec
    if duplicates:
        log.warning("%s: %d duplicate words, last occurrence kept", path, duplicates)
    return EmbeddingTable(list(vectors), list(vectors.values()), duplicates=duplicates)


def load_wordlist(path) -> list[str]:
    """One word per line; blank lines and ``#`` comments skipped."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.append(line)
    return words


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise UndefinedCosineError("cosine undefined for a zero vector")
    c = float(np.dot(u, v) / (nu * nv))
    return min(1.0, max(-1.0, c))


@dataclass(frozen=True)
class AttributePair:
    left: str
    right: str

    def swapped(self) -> "AttributePair":
        return AttributePair(self.right, self.left)

    @classmethod
    def parse(cls, text: str) -> "AttributePair":
        parts = text.replace(",", "/").split("/")
        if len(parts) != 2 or not all(p.strip() for p in parts):
            raise ConfigError(f"attribute pair must look like 'he/she', got {text!r}")
        return cls(parts[0].strip(), parts[1].strip())

    def __str__(self) -> str:
        return f"{self.left}/{self.right}"


def bias_score(word: str, pair: AttributePair, table: EmbeddingTable) -> float:
    w = table.vector(word)
    return cosine(w, table.vector(pair.left)) - cosine(w, table.vector(pair.right))


@dataclass
class BiasReport:
    pair: AttributePair
    scores: dict[str, float]
    missing: list[str]
    table_fingerprint: str
    mean: float = field(init=False)
    max_abs_word: str = field(init=False)

    def __post_init__(self):
        vals = np.array(list(self.scores.values()))
        self.mean = float(vals.mean())
        self.max_abs_word = max(self.scores, key=lambda w: (abs(self.scores[w]), w))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "score"])
        for word, s in self.scores.items():
            w.writerow([word, repr(s)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "pair": [self.pair.left, self.pair.right],
            "n_scored": len(self.scores),
            "missing": self.missing,
            "mean": self.mean,
            "max_abs_word": self.max_abs_word,
            "max_abs_score": self.scores[self.max_abs_word],
            "table_fingerprint": self.table_fingerprint,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def bias_report(wordlist: Iterable[str], pair: AttributePair, table: EmbeddingTable) -> BiasReport:
    """Score every word found in ``table``; absent words are listed in ``missing``."""
    table.vector(pair.left)
    table.vector(pair.right)
    scores: dict[str, float] = {}
    missing: list[str] = []
    for word in dict.fromkeys(wordlist):
        if word in table:
            scores[word] = bias_score(word, pair, table)
        else:
            missing.append(word)
    if missing:
        log.warning("%d words not in embedding table: %s", len(missing), ", ".join(missing))
    if not scores:
        raise EmptyReportError("no word of the word list is in the embedding table")
    return BiasReport(pair, scores, missing, table.fingerprint())


def gender_direction(pairs: Sequence[AttributePair], table: EmbeddingTable) -> np.ndarray:
    """Unit vector along the mean of ``left - right`` over ``pairs``."""
    if not pairs:
        raise DegenerateDirectionError("no attribute pairs given")
    diffs = np.array([table.vector(p.left) - table.vector(p.right) for p in pairs])
    mean = diffs.mean(axis=0)
    norm = np.linalg.norm(mean)
    if not norm > 0:
        raise DegenerateDirectionError("attribute differences average to the zero vector")
    return mean / norm


def debias_project(table: EmbeddingTable, direction, exclude: Iterable[str] = ()) -> EmbeddingTable:
    """Remove the ``direction`` component from every word not in ``exclude``."""
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (table.dimension,):
        raise DomainError(f"direction has shape {d.shape}, table dimension is {table.dimension}")
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise DomainError("direction must be unit norm")
    excluded = set(exclude)
    keep = np.array([w in excluded for w in table.words], dtype=np.bool_)
    vecs = np.array(table.vectors)
    proj = vecs @ d
    vecs[~keep] -= np.outer(proj[~keep], d)
    return EmbeddingTable(table.words, vecs)


# --------------------------------------------------------------------------
# Decoding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TokenDistribution:
    tokens: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.probs) or not self.tokens:
            raise DomainError("need one probability per token and at least one token")
        if len(set(self.tokens)) != len(self.tokens):
            raise DomainError("duplicate tokens")
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise DomainError("probabilities must be finite and >= 0")
        if abs(p.sum() - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", tuple(float(x) for x in p / p.sum()))

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float]) -> "TokenDistribution":
        return cls(tuple(probs), tuple(probs.values()))


def sample_tokens(dist: TokenDistribution, mode: str, n: int, seed: int | None = None) -> dict[str, int]:
    """Frequencies of ``n`` decoded tokens; only tokens drawn at least once appear.

    ``argmax`` always emits the most probable token (first in token order on
    ties).  ``proportional`` draws from the distribution and needs a seed.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if mode == "argmax":
        return {dist.tokens[int(np.argmax(dist.probs))]: n}
    if mode != "proportional":
        raise ConfigError(f"mode must be 'argmax' or 'proportional', got {mode!r}")
    if seed is None:
        raise ConfigError("proportional sampling requires a seed")
    counts = np.random.default_rng(seed).multinomial(n, dist.probs)
    return {t: int(c) for t, c in zip(dist.tokens, counts) if c > 0}


# --------------------------------------------------------------------------
# Synthetic tables with a planted bias direction
# --------------------------------------------------------------------------

def planted_table(biases: Mapping[str, float], pair: AttributePair = AttributePair("he", "she"),
                  dim: int = 16, seed: int = 0, attribute_offset: float = 1.0) -> tuple[EmbeddingTable, np.ndarray]:
    """Table whose only left/right signal lies along one known unit direction.

    The attribute words are ``c +/- attribute_offset * d`` (equal norms) and
    each word is a random vector orthogonal to ``d`` plus ``bias * d``.
    Returns ``(table, d)``.
    """
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(dim)
    d /= np.linalg.norm(d)

    def orth(v):
        return v - (v @ d) * d

    c = orth(rng.standard_normal(dim))
    words = [pair.left, pair.right]
    vecs = [c + attribute_offset * d, c - attribute_offset * d]
    for w, b in biases.items():
        words.append(w)
        vecs.append(orth(rng.standard_normal(dim)) + b * d)
    return EmbeddingTable(words, np.array(vecs)), d
