import itertools

import numpy as np
import pytest

from noisymst.graph import SimpleGraph


def random_graph(rng, n, p):
    pairs = [(a, b) for a, b in itertools.combinations(range(n), 2) if rng.random() < p]
    return SimpleGraph(n, pairs)


def random_tree(rng, n):
    return SimpleGraph(n, [(int(rng.integers(v)), v) for v in range(1, n)])


def cycle(k, offset=0):
    return [(offset + i, offset + (i + 1) % k) for i in range(k)]


def complete(k):
    return list(itertools.combinations(range(k), 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


_CRITERIA: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
