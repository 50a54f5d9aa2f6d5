from __future__ import annotations

import itertools

import numpy as np
import pytest

from echograph.graph_metrics import FollowGraph


def random_graph(seed: int, n_max: int = 100, density: float | None = None) -> FollowGraph:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    p = density if density is not None else float(rng.uniform(0.0, 0.3))
    mask = rng.random((n, n)) < p
    src, dst = np.nonzero(mask)
    return FollowGraph.from_index_pairs([f"u{i:03d}" for i in range(n)], src, dst)


def dense_pagerank(g: FollowGraph, damping: float = 0.85, tol: float = 1e-15, max_iter: int = 10_000) -> np.ndarray:
    """Plain dense Google-matrix power iteration."""
    n = g.node_count
    a = np.zeros((n, n))
    for u, v in g.edges():
        a[g.index_of(u), g.index_of(v)] = 1.0
    p = np.empty((n, n))
    for i in range(n):
        s = a[i].sum()
        p[i] = a[i] / s if s else np.full(n, 1.0 / n)
    google = damping * p + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ google
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    return x


def enumerate_clustering(g: FollowGraph) -> list[float]:
    """cc by checking every neighbour pair of every node."""
    nbrs: list[set[int]] = [set() for _ in range(g.node_count)]
    for u, v in g.edges():
        i, j = g.index_of(u), g.index_of(v)
        nbrs[i].add(j)
        nbrs[j].add(i)
    out = []
    for i in range(g.node_count):
        d = len(nbrs[i])
        if d < 2:
            out.append(0.0)
            continue
        closed = sum(1 for a, b in itertools.combinations(sorted(nbrs[i]), 2) if b in nbrs[a])
        out.append(2.0 * closed / (d * (d - 1)))
    return out


@pytest.fixture
def triangle() -> FollowGraph:
    return FollowGraph.from_edges([("a", "b"), ("b", "c"), ("c", "a")])


@pytest.fixture
def path() -> FollowGraph:
    return FollowGraph.from_edges([("a", "b"), ("b", "c")])


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
