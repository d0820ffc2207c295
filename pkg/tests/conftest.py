import numpy as np
import pytest

from bdlandscape.linalg import SignalPair

_ACCEPTANCE_LINES = []


def record_acceptance(label: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}" + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, d1, d2, scale=1.0):
    return SignalPair(scale * rng.standard_normal(d1), scale * rng.standard_normal(d2))
