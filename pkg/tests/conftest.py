import numpy as np
import pytest

from isogap import StationaryMeasure, build_kernel

ACCEPTANCE = []


def record(name: str, ok: bool, detail: str = "") -> None:
    """Keep one verdict line per acceptance criterion for the summary."""
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rank_one():
    w = np.array([0.5, 0.3, 0.2])
    return build_kernel(np.tile(w, (3, 1))), StationaryMeasure(w)


@pytest.fixture
def identity2():
    return build_kernel(np.eye(2)), StationaryMeasure([0.5, 0.5])


def flip_chain(a: float):
    P = np.array([[1 - a, a], [a, 1 - a]])
    return build_kernel(P), StationaryMeasure([0.5, 0.5])
