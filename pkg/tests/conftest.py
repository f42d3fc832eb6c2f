from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from fairaudit.compas import load_count_fixture
from fairaudit.dataset import OutcomeTable
from fairaudit.metrics import ConfusionMatrix

# first calls may trigger numba compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"
COMPAS_CSV = DATA / "compas-scores-two-years.csv.gz"

# Table 5b, transcribed by hand (TP, FN, FP, TN).
TABLE_5B = {
    "all": ConfusionMatrix(tp=2035, fn=1216, fp=1282, tn=2681),
    "black": ConfusionMatrix(tp=1369, fn=532, fp=805, tn=990),
    "white": ConfusionMatrix(tp=505, fn=461, fp=349, tn=1139),
}


@pytest.fixture(scope="session")
def compas_counts():
    return load_count_fixture()


@pytest.fixture(scope="session")
def compas_csv():
    return COMPAS_CSV


def random_table(rng: np.random.Generator, n: int, groups=("a", "b"), weighted=False) -> OutcomeTable:
    return OutcomeTable(
        rng.random(n) < 0.5,
        rng.random(n) < 0.5,
        [groups[i] for i in rng.integers(0, len(groups), n)],
        rng.uniform(0.5, 2.0, n) if weighted else None,
    )


counts = st.integers(min_value=0, max_value=10_000)
positive_counts = st.integers(min_value=1, max_value=10_000)
confusion = st.builds(ConfusionMatrix, tp=counts, fp=counts, fn=counts, tn=counts).filter(lambda c: c.total > 0)
full_confusion = st.builds(ConfusionMatrix, tp=positive_counts, fp=positive_counts, fn=positive_counts,
                           tn=positive_counts)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
