"""Strategic gaming of a disclosed linear classifier.

Each round: train a logistic classifier on the current features, disclose it,
let every negatively classified agent make the minimal move along the mutable
axis that flips its prediction (within budget), record the round, repeat.
True classes and immutable features never change, so with enough rounds the
mutable axis stops carrying information and the boundary is set by the
immutable feature alone.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from . import kernels
from .errors import ConfigError, GenerationError, TrainingError

DATA_RULES = ("gaussian_blobs", "mutable_sign")


@dataclass(frozen=True)
class GamingConfig:
    n_agents: int = 1000
    seed: int | None = None
    data_rule: str = "gaussian_blobs"
    # gaussian_blobs: feature means are +/- mu for the two classes
    mu_immutable: float = 1.0
    mu_mutable: float = 1.5
    sd: float = 0.8
    # mutable_sign: class = [x_mutable + noise * N(0,1) > 0]
    noise: float = 0.1
    budget: float = math.inf
    margin: float = 1e-6
    max_rounds: int = 100
    weight_tol: float = 1e-4
    dominance_threshold: float = 0.95
    step: float = 0.1
    iterations: int = 2000
    l2: float = 0.0

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigError("n_agents must be >= 2")
        if self.seed is not None and self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.data_rule not in DATA_RULES:
            raise ConfigError(f"data_rule must be one of {DATA_RULES}, got {self.data_rule!r}")
        if not (self.budget >= 0 and not math.isnan(self.budget)):
            raise ConfigError("budget must be >= 0 (inf for unbounded)")
        if not (self.margin >= 0 and math.isfinite(self.margin)):
            raise ConfigError("margin must be finite and >= 0")
        if self.max_rounds < 1 or self.iterations < 1:
            raise ConfigError("max_rounds and iterations must be >= 1")
        for name in ("mu_immutable", "mu_mutable", "sd", "noise", "step", "l2", "weight_tol", "dominance_threshold"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.sd <= 0 or self.step <= 0 or self.l2 < 0:
            raise ConfigError("sd and step must be > 0, l2 >= 0")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "GamingConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in fields:
                raise ConfigError(f"unknown config key: {key!r}")
            kwargs[key] = _coerce(key, raw, fields[key].type)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "GamingConfig":
        return cls.from_mapping(read_key_values(path))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["budget"] = "inf" if math.isinf(self.budget) else self.budget
        return d


def _coerce(key: str, raw: str, typ: str):
    raw = raw.strip()
    try:
        if typ.startswith("int"):
            if raw.lower() in ("", "none") and "None" in typ:
                return None
            return int(raw)
        if typ == "float":
            if raw.lower() in ("inf", "unbounded", "infinity"):
                return math.inf
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None


def read_key_values(path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# --------------------------------------------------------------------------
# Population and classifier
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Agent:
    x_immutable: float
    x_mutable: float
    true_class: bool
    gamed: bool = False


@dataclass
class Population:
    x_immutable: np.ndarray
    x_mutable: np.ndarray
    true_class: np.ndarray
    gamed: np.ndarray = None

    def __post_init__(self):
        if self.gamed is None:
            self.gamed = np.zeros(len(self.true_class), dtype=np.bool_)

    def __len__(self) -> int:
        return len(self.true_class)

    def features(self) -> np.ndarray:
        return np.column_stack([self.x_immutable, self.x_mutable])

    def agents(self) -> Iterator[Agent]:
        for xi, xm, y, g in zip(self.x_immutable, self.x_mutable, self.true_class, self.gamed):
            yield Agent(float(xi), float(xm), bool(y), bool(g))

    def copy(self) -> "Population":
        return Population(self.x_immutable.copy(), self.x_mutable.copy(), self.true_class.copy(), self.gamed.copy())


def _require_seed(config: GamingConfig) -> int:
    if config.seed is None:
        raise ConfigError("a seed is required for population generation")
    return config.seed


def generate_population(config: GamingConfig) -> Population:
    rng = np.random.default_rng(_require_seed(config))
    n = config.n_agents
    if config.data_rule == "gaussian_blobs":
        # exact class balance, so n = 2 always yields one agent per class
        y = rng.permutation(np.arange(n) % 2 == 0)
        s = np.where(y, 1.0, -1.0)
        x_imm = config.mu_immutable * s + config.sd * rng.standard_normal(n)
        x_mut = config.mu_mutable * s + config.sd * rng.standard_normal(n)
    else:
        x_imm = rng.standard_normal(n)
        x_mut = rng.standard_normal(n)
        y = x_mut + config.noise * rng.standard_normal(n) > 0
    if y.all() or not y.any():
        raise GenerationError(f"data rule {config.data_rule!r} produced a single class for seed {config.seed}")
    return Population(x_imm, x_mut, y.astype(np.bool_))


@dataclass(frozen=True)
class LinearClassifier:
    """Predict positive iff ``w_immutable*x_imm + w_mutable*x_mut + bias >= 0``."""

    w_immutable: float
    w_mutable: float
    bias: float

    def score(self, x_immutable, x_mutable):
        return self.w_immutable * np.asarray(x_immutable) + self.w_mutable * np.asarray(x_mutable) + self.bias

    def predict(self, x_immutable, x_mutable):
        return self.score(x_immutable, x_mutable) >= 0.0

    def accuracy(self, population: Population) -> float:
        pred = self.predict(population.x_immutable, population.x_mutable)
        return float(np.mean(pred == population.true_class))

    def as_vector(self) -> np.ndarray:
        return np.array([self.w_immutable, self.w_mutable, self.bias])


def train_classifier(population: Population, config: GamingConfig | None = None) -> LinearClassifier:
    """Logistic regression, full-batch gradient descent from zero weights."""
    config = config or GamingConfig()
    y = population.true_class
    if y.all() or not y.any():
        raise TrainingError("training data contains a single class")
    w, b = kernels.logistic_gd(population.features(), y.astype(np.float64), config.step, config.iterations, config.l2)
    clf = LinearClassifier(float(w[0]), float(w[1]), float(b))
    if clf.w_immutable == 0.0 and clf.w_mutable == 0.0:
        raise TrainingError("training produced all-zero weights")
    return clf


def immutable_dominance(clf: LinearClassifier) -> float | None:
    """Share of absolute weight carried by the immutable feature; None if both weights are 0."""
    total = abs(clf.w_immutable) + abs(clf.w_mutable)
    if total == 0:
        return None
    return abs(clf.w_immutable) / total


class Move(NamedTuple):
    x_immutable: float
    x_mutable: float
    flagged: bool


def counterfactual_move(agent: Agent, clf: LinearClassifier, config: GamingConfig | None = None) -> Move:
    """Smallest mutable-feature change (plus margin) that flips ``agent`` to positive.

    Positively classified agents are returned unchanged.  When the flip needs
    more than ``config.budget`` the agent moves the full budget toward the
    boundary and is flagged; with ``w_mutable == 0`` it cannot move at all and
    is flagged.
    """
    config = config or GamingConfig()
    new, _, flagged = kernels.counterfactual_shift(
        np.array([agent.x_immutable]), np.array([agent.x_mutable]),
        clf.w_immutable, clf.w_mutable, clf.bias, config.margin, config.budget,
    )
    return Move(agent.x_immutable, float(new[0]), bool(flagged[0]))


def flip_distance(agent: Agent, clf: LinearClassifier) -> float:
    """Analytic mutable-axis distance to the boundary; 0 if already positive."""
    s = float(clf.score(agent.x_immutable, agent.x_mutable))
    if s >= 0:
        return 0.0
    if clf.w_mutable == 0:
        return math.inf
    return abs(s) / abs(clf.w_mutable)


# --------------------------------------------------------------------------
# Round loop
# --------------------------------------------------------------------------

TRACE_COLUMNS = (
    "round",
    "w_immutable",
    "w_mutable",
    "bias",
    "dominance",
    "train_accuracy",
    "pre_game_acceptance",
    "acceptance_rate",
    "post_game_accuracy",
    "n_moved",
    "n_flagged",
    "weight_change",
)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    w_immutable: float
    w_mutable: float
    bias: float
    dominance: float | None
    train_accuracy: float
    pre_game_acceptance: float
    acceptance_rate: float
    post_game_accuracy: float
    n_moved: int
    n_flagged: int
    weight_change: float | None

    @property
    def classifier(self) -> LinearClassifier:
        return LinearClassifier(self.w_immutable, self.w_mutable, self.bias)


@dataclass
class GamingTrace:
    config: GamingConfig
    rounds: list[RoundRecord]
    termination: str
    snapshots: list[Population] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rounds:
            w.writerow(["" if getattr(r, c) is None else repr(getattr(r, c)) for c in TRACE_COLUMNS])
        return buf.getvalue()

    @property
    def final(self) -> RoundRecord:
        return self.rounds[-1]


def run_gaming_rounds(config: GamingConfig, keep_snapshots: bool = False) -> GamingTrace:
    """Train, disclose, game, retrain until converged or ``max_rounds``.

    Retraining uses the gamed features with the original true labels.
    ``snapshots[k]`` (if kept) is the population each round-k classifier was
    trained on; one extra final snapshot holds the post-game state.
    """
    pop = generate_population(config)
    rows: list[RoundRecord] = []
    snapshots = []
    prev = None
    reason = "max_rounds"
    for k in range(config.max_rounds):
        if keep_snapshots:
            snapshots.append(pop.copy())
        clf = train_classifier(pop, config)
        pre_pred = clf.predict(pop.x_immutable, pop.x_mutable)
        new_mut, moved, flagged = kernels.counterfactual_shift(
            pop.x_immutable, pop.x_mutable, clf.w_immutable, clf.w_mutable, clf.bias, config.margin, config.budget
        )
        pop.x_mutable = new_mut
        pop.gamed = pop.gamed | moved
        post_pred = clf.predict(pop.x_immutable, pop.x_mutable)
        vec = clf.as_vector()
        change = None if prev is None else float(np.max(np.abs(vec - prev)))
        dom = immutable_dominance(clf)
        rows.append(RoundRecord(
            round=k,
            w_immutable=clf.w_immutable,
            w_mutable=clf.w_mutable,
            bias=clf.bias,
            dominance=dom,
            train_accuracy=float(np.mean(pre_pred == pop.true_class)),
            pre_game_acceptance=float(np.mean(pre_pred)),
            acceptance_rate=float(np.mean(post_pred)),
            post_game_accuracy=float(np.mean(post_pred == pop.true_class)),
            n_moved=int(moved.sum()),
            n_flagged=int(flagged.sum()),
            weight_change=change,
        ))
        if dom is not None and dom >= config.dominance_threshold:
            reason = "dominance"
            break
        if change is not None and change < config.weight_tol:
            reason = "converged"
            break
        prev = vec
    if keep_snapshots:
        snapshots.append(pop.copy())
    return GamingTrace(config, rows, reason, snapshots)


def plot_trace(trace: GamingTrace, out_dir, rounds: list[int] | None = None) -> list[Path]:
    """One SVG per requested round: agents and that round's decision boundary.

    Needs ``matplotlib`` and a trace run with ``keep_snapshots=True``.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not trace.snapshots:
        raise ValueError("trace has no snapshots; rerun with keep_snapshots=True")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if rounds is None:
        last = len(trace.rounds) - 1
        rounds = sorted({0, min(1, last), last})
    matplotlib.rcParams["svg.hashsalt"] = "fairaudit"
    written = []
    for k in rounds:
        rec = trace.rounds[k]
        pop = trace.snapshots[k + 1]
        fig, ax = plt.subplots(figsize=(4, 4))
        y = pop.true_class
        ax.scatter(pop.x_immutable[y], pop.x_mutable[y], s=4, c="tab:blue", label="positive")
        ax.scatter(pop.x_immutable[~y], pop.x_mutable[~y], s=4, c="tab:red", label="negative")
        xs = np.linspace(pop.x_immutable.min(), pop.x_immutable.max(), 2)
        if rec.w_mutable != 0:
            ax.plot(xs, -(rec.w_immutable * xs + rec.bias) / rec.w_mutable, "k-")
        else:
            ax.axvline(-rec.bias / rec.w_immutable, color="k")
        ax.set_xlabel("x_immutable")
        ax.set_ylabel("x_mutable")
        ax.set_title(f"round {k} (after gaming)")
        ax.legend(loc="lower right", fontsize=7)
        path = out_dir / f"round_{k:03d}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
