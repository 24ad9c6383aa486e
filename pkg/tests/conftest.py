import numpy as np
import pytest
import scipy.sparse as sp

from graphforms import Graph
from graphforms.boundary import GraphWithBoundary


def random_graph(rng, n_max=50, p=None, killing=False, connected=False):
    """Random weights in (0, 2], measures in (0.1, 2]."""
    n = int(rng.integers(2, n_max + 1))
    p = p if p is not None else min(1.0, 3.0 / n + 0.1)
    mask = np.triu(rng.random((n, n)) < p, 1)
    if connected:
        perm = rng.permutation(n)
        for a, b in zip(perm, perm[1:]):
            mask[min(a, b), max(a, b)] = True
    w = np.where(mask, 2.0 * (1.0 - rng.random((n, n))), 0.0)
    b = sp.csr_matrix(w + w.T)
    c = rng.random(n) * (rng.random(n) < 0.3) if killing else np.zeros(n)
    m = 0.1 + 1.9 * (1.0 - rng.random(n))
    return Graph(b, c, m)


def random_boundary_model(rng, max_interior=20, max_boundary=5, killing=False):
    ni = int(rng.integers(1, max_interior + 1))
    nb = int(rng.integers(1, max_boundary + 1))
    n = ni + nb
    edges = {}
    for x in range(1, ni):  # spanning tree on the interior
        y = int(rng.integers(0, x))
        edges[(y, x)] = 0.1 + rng.random()
    for z in range(ni, n):  # every boundary vertex hangs off the interior
        edges[(int(rng.integers(0, ni)), z)] = 0.1 + rng.random()
    for _ in range(int(rng.integers(0, 2 * n))):
        u, v = sorted(int(t) for t in rng.choice(n, 2, replace=False))
        edges.setdefault((u, v), 0.1 + rng.random())
    c = rng.random(ni) * (rng.random(ni) < 0.3) if killing else 0.0
    m = 0.2 + rng.random(ni)
    return GraphWithBoundary.build(ni, nb, [(u, v, w) for (u, v), w in edges.items()], c, m)


def three_vertex():
    return GraphWithBoundary.build(1, 2, [(0, 1, 1.0), (0, 2, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
