import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qasp_truss.io import BENCHMARK_CASES, load_benchmark  # noqa: E402
from qasp_truss.truss import TrussSystem, make_model  # noqa: E402


@pytest.fixture(scope="session")
def benchmarks():
    """case id -> (model, meta, TrussSystem)."""
    out = {}
    for case in BENCHMARK_CASES:
        model, meta = load_benchmark(case)
        out[case] = (model, meta, TrussSystem(model))
    return out


@pytest.fixture(scope="session")
def case1(benchmarks):
    return benchmarks["case1"]


@pytest.fixture
def single_bar():
    """Unit bar along x, left end pinned, right end on a roller; k = E A / L = 1."""
    return make_model([[0, 0], [1, 0]], [(0, 1, 1.0, 1.0)], [(0, 0), (0, 1), (1, 1)], [(1, 0, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(label, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
