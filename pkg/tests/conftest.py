from pathlib import Path

import numpy as np
import pytest

from gemsec.graph import from_edges

REPO_ROOT = Path(__file__).resolve().parent.parent
KARATE_PATH = REPO_ROOT / "data" / "karate_club.csv"

# instructor-side faction of the karate club, in original node ids
KARATE_INSTRUCTOR = {0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 16, 17, 19, 21}


@pytest.fixture
def triangle():
    return from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def path3():
    # a - b - c
    return from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def two_cliques():
    """Two 8-cliques joined by a single bridge edge."""
    edges = []
    for base in (0, 8):
        for i in range(8):
            for j in range(i + 1, 8):
                edges.append((base + i, base + j))
    edges.append((0, 8))
    return from_edges(16, edges)


def star_graph(leaves: int):
    return from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_connected_graph(n: int, p: float, seed: int):
    """Small dense-ish random graph plus a spanning path so nothing is isolated."""
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(n - 1)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return from_edges(n, edges)
