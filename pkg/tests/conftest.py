from __future__ import annotations

import random
from fractions import Fraction

import pytest

from loadbal import Instance

# criterion number -> (title, passed or None, detail)
ACCEPTANCE: dict = {}


def record(number: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (title, passed, detail)


@pytest.fixture
def golden():
    """Three machines (1, 2, 4) and the four-job worked example."""
    return Instance.from_values([1, 2, 4], [6, 4, 1, Fraction(3, 5)])


def random_instance(rng: random.Random, m_max=4, n_max=6, seed=0) -> Instance:
    m = rng.randint(1, m_max)
    n = rng.randint(0, n_max)
    speeds = [Fraction(rng.randint(1, 8), rng.choice([1, 2, 4])) for _ in range(m)]
    sizes = [Fraction(rng.randint(1, 12), rng.choice([1, 2, 3])) for _ in range(n)]
    return Instance.from_values(speeds, sizes, seed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {k:2d}. {title}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line)
