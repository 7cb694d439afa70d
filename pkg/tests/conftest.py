import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def brute_neighbors(x, i, delta):
    """Reference delta-neighbour set from scalar loops."""
    out = set()
    for j in range(len(x)):
        if j == i:
            continue
        s = 0.0
        for a, b in zip(x[i], x[j]):
            s += (float(a) - float(b)) ** 2
        if s ** 0.5 <= delta:
            out.add(j)
    return out


class UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)

    def partition(self):
        groups = {}
        for i in range(len(self.p)):
            groups.setdefault(self.find(i), set()).add(i)
        return {frozenset(g) for g in groups.values()}


def partition_of(labels):
    groups = {}
    for i, lab in enumerate(np.asarray(labels)):
        groups.setdefault(int(lab), set()).add(i)
    return {frozenset(g) for g in groups.values()}


# One line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
