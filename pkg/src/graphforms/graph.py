"""Weighted graphs over discrete measure spaces.

A :class:`Graph` is finite: symmetric edge weights ``b`` (sparse), a killing
vector ``c`` and a strictly positive measure ``m`` on dense vertex indices
``0..n-1``.  Infinite graphs are :class:`GraphFamily` objects, i.e. a
deterministic adjacency oracle that can be materialized on any hop ball.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import HorizonError, InputError

Vertex = Hashable
Rule = Callable[[Any], tuple[Sequence[tuple[Any, float]], float, float]]


class Violation(NamedTuple):
    kind: str
    vertices: tuple
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind} at {self.vertices}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True, eq=False)
class Graph:
    """Finite graph ``(b, c)`` over ``(X, m)`` with ``X = {0, ..., n-1}``.

    ``b`` is kept as given so that :func:`validate` can report asymmetric
    input; use :meth:`from_edges` to build graphs that are symmetric by
    construction.
    """

    b: sp.csr_matrix
    c: np.ndarray
    m: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        b = sp.csr_matrix(self.b, dtype=float)
        b.sum_duplicates()
        b.sort_indices()
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).copy())
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float).copy())
        n = b.shape[0]
        if b.shape != (n, n) or self.c.shape != (n,) or self.m.shape != (n,):
            raise InputError(f"shape mismatch: b {b.shape}, c {self.c.shape}, m {self.m.shape}")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != n or len(set(labels)) != n:
                raise InputError("labels must be distinct, one per vertex")
            object.__setattr__(self, "labels", labels)
        self.c.flags.writeable = False
        self.m.flags.writeable = False

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int, float]],
        c: Sequence[float] | float = 0.0,
        m: Sequence[float] | float = 1.0,
        labels: Sequence | None = None,
    ) -> "Graph":
        """Build a graph from unordered weighted pairs, mirroring each one."""
        store: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) outside vertex range 0..{n - 1}")
            key = (min(u, v), max(u, v))
            if key in store:
                raise InputError(f"duplicate edge {key}")
            store[key] = float(w)
        rows, cols, vals = [], [], []
        for (u, v), w in store.items():
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
        b = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        c = np.full(n, float(c)) if np.isscalar(c) else np.asarray(c, float)
        m = np.full(n, float(m)) if np.isscalar(m) else np.asarray(m, float)
        return cls(b, c, m, tuple(labels) if labels is not None else None)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @cached_property
    def deg(self) -> np.ndarray:
        """Weighted degree ``deg(x) = sum_y b(x, y)`` (compensated sums)."""
        out = np.array([math.fsum(self.b.data[self.b.indptr[i]:self.b.indptr[i + 1]])
                        for i in range(self.n)])
        out.flags.writeable = False
        return out

    def neighbors(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbors of ``x`` in ascending index order with their weights (b > 0 only)."""
        if not 0 <= x < self.n:
            raise KeyError(f"unknown vertex {x}")
        lo, hi = self.b.indptr[x], self.b.indptr[x + 1]
        idx, w = self.b.indices[lo:hi], self.b.data[lo:hi]
        keep = w > 0
        return idx[keep], w[keep]

    def edges(self) -> list[tuple[int, int, float]]:
        """Edges ``(x, y, b)`` with ``x < y`` and ``b > 0`` in lexicographic order."""
        up = sp.triu(self.b, k=1).tocoo()
        order = np.lexsort((up.col, up.row))
        return [(int(up.row[k]), int(up.col[k]), float(up.data[k]))
                for k in order if up.data[k] > 0]

    def index(self, label) -> int:
        if self.labels is None:
            if isinstance(label, (int, np.integer)) and 0 <= label < self.n:
                return int(label)
            raise KeyError(f"unknown vertex {label!r}")
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"unknown vertex {label!r}") from None

    @cached_property
    def _label_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels or ())}

    def with_measure(self, m) -> "Graph":
        return Graph(self.b, self.c, m, self.labels)

    def with_killing(self, c) -> "Graph":
        return Graph(self.b, c, self.m, self.labels)

    def as_family(self, root: int = 0) -> "GraphFamily":
        """View a finite graph as a family rooted at ``root`` (labels are indices)."""

        def rule(x):
            idx, w = self.neighbors(x)
            return list(zip(idx.tolist(), w.tolist())), float(self.c[x]), float(self.m[x])

        return GraphFamily(rule, root, name="finite", params={"n": self.n})


def validate(g: Graph) -> list[Violation]:
    """Every breach of the graph axioms, as data."""
    out: list[Violation] = []
    b = g.b.tocoo()
    seen = set()
    bt = g.b.T.tocsr()
    for i, j, w in zip(b.row, b.col, b.data):
        i, j = int(i), int(j)
        if not math.isfinite(w):
            out.append(Violation("non-finite weight", (i, j), repr(float(w))))
        elif w < 0:
            out.append(Violation("negative weight", (i, j), repr(float(w))))
        if i == j and w != 0:
            out.append(Violation("nonzero diagonal", (i,), repr(float(w))))
        elif i != j:
            key = (min(i, j), max(i, j))
            if key not in seen and g.b[i, j] != bt[i, j]:
                seen.add(key)
                out.append(Violation("asymmetry", key,
                                     f"b{key}={g.b[key]!r}, b{key[::-1]}={g.b[key[::-1]]!r}"))
    for x in np.flatnonzero(~np.isfinite(g.deg)):
        out.append(Violation("infinite degree", (int(x),)))
    for x in np.flatnonzero(~(g.c >= 0)):
        out.append(Violation("negative killing", (int(x),), repr(float(g.c[x]))))
    for x in np.flatnonzero(~(g.m > 0) | ~np.isfinite(g.m)):
        out.append(Violation("nonpositive measure", (int(x),), repr(float(g.m[x]))))
    return out


def scaled_degree(g: Graph, x: int) -> float:
    """``Deg(x) = (deg(x) + c(x)) / m(x)``."""
    if not 0 <= x < g.n:
        raise KeyError(f"unknown vertex {x}")
    _, w = g.neighbors(x)
    return math.fsum([*w.tolist(), float(g.c[x])]) / float(g.m[x])


def connected_components(g: Graph) -> list[list[int]]:
    """Classes of the relation ``b(x, y) > 0``, ordered by smallest member."""
    pattern = g.b.copy()
    pattern.data = (pattern.data > 0).astype(float)
    pattern.eliminate_zeros()
    k, lab = _cc(pattern, directed=False)
    classes: dict[int, list[int]] = {}
    for x, l in enumerate(lab):
        classes.setdefault(int(l), []).append(x)
    return sorted(classes.values(), key=lambda cl: cl[0])


class GraphFamily:
    """A possibly infinite graph given by an adjacency oracle.

    ``rule(x)`` returns ``(neighbors, c(x), m(x))`` where ``neighbors`` is a
    sequence of ``(y, b(x, y))``.  Results are memoized; the rule must be
    deterministic and symmetric.
    """

    def __init__(self, rule: Rule, root, name: str = "custom", params: dict | None = None,
                 box: Callable[[int], list] | None = None,
                 tail_mass: Callable[[int], float] | None = None):
        self._rule = rule
        self.root = root
        self.name = name
        self.params = dict(params or {})
        self._box = box
        self.tail_mass = tail_mass
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"GraphFamily({self.name}, {self.params})"

    def _entry(self, x):
        try:
            return self._cache[x]
        except KeyError:
            nbrs, c, m = self._rule(x)
            entry = (tuple((y, float(w)) for y, w in nbrs if w > 0), float(c), float(m))
            self._cache[x] = entry
            return entry

    def neighbors(self, x) -> tuple[tuple[Any, float], ...]:
        return self._entry(x)[0]

    def killing(self, x) -> float:
        return self._entry(x)[1]

    def measure(self, x) -> float:
        return self._entry(x)[2]

    def ball(self, radius: int, max_vertices: int | None = None) -> tuple[list, dict]:
        """Vertices within hop distance ``radius`` of the root in BFS order, plus hop map."""
        if radius < 0:
            raise InputError("radius must be nonnegative")
        hop = {self.root: 0}
        order = [self.root]
        queue = deque([self.root])
        while queue:
            x = queue.popleft()
            if hop[x] == radius:
                continue
            for y, _ in self.neighbors(x):
                if y not in hop:
                    hop[y] = hop[x] + 1
                    order.append(y)
                    queue.append(y)
                    if max_vertices is not None and len(order) > max_vertices:
                        raise HorizonError(
                            f"ball of radius {radius} exceeds {max_vertices} vertices")
        return order, hop

    def box(self, radius: int) -> list:
        if self._box is None:
            raise InputError(f"family {self.name!r} has no box regions")
        return self._box(radius)

    def induced(self, vertices: Sequence) -> tuple[Graph, list, np.ndarray]:
        """Induced graph on ``vertices``, the frontier, and per-vertex outflow weight."""
        index = {v: i for i, v in enumerate(vertices)}
        if len(index) != len(vertices):
            raise InputError("duplicate vertices in region")
        rows, cols, vals = [], [], []
        outflow = np.zeros(len(vertices))
        frontier: dict = {}
        c = np.empty(len(vertices))
        m = np.empty(len(vertices))
        for i, x in enumerate(vertices):
            nbrs, c[i], m[i] = self._entry(x)
            out = []
            for y, w in nbrs:
                j = index.get(y)
                if j is None:
                    out.append(w)
                    frontier.setdefault(y, None)
                else:
                    rows.append(i)
                    cols.append(j)
                    vals.append(w)
            outflow[i] = math.fsum(out)
        n = len(vertices)
        b = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return Graph(b, c, m, tuple(vertices)), list(frontier), outflow

    def materialize(self, radius: int) -> Graph:
        order, _ = self.ball(radius)
        return self.induced(order)[0]

    def with_measure(self, measure: Callable[[Any], float], name: str | None = None) -> "GraphFamily":
        """Same edges and killing, different vertex measure."""
        base = self

        def rule(x):
            nbrs, c, _ = base._entry(x)
            return nbrs, c, measure(x)

        return GraphFamily(rule, self.root, name or self.name, self.params, self._box, None)


# -- generators ---------------------------------------------------------------

def _ratio_seq(params: dict, list_key: str, ratio_key: str, default: float):
    if list_key in params:
        seq = [float(v) for v in params[list_key]]
        return (lambda k: seq[k] if k < len(seq) else None), len(seq)
    r = float(params.get(ratio_key, default))
    scale = float(params.get(ratio_key + "_scale", 1.0))
    return (lambda k: scale * r ** k), None


def _path(params):
    n = int(params.get("n", 0))
    if n < 1:
        raise InputError("path needs n >= 1")
    w = float(params.get("weight", 1.0))

    def rule(x):
        nbrs = [(y, w) for y in (x - 1, x + 1) if 0 <= y < n]
        return nbrs, 0.0, 1.0

    return GraphFamily(rule, 0, "path", {"n": n, "weight": w})


def _lattice(params):
    d = int(params.get("d", 1))
    if d < 1:
        raise InputError("lattice needs d >= 1")
    w = float(params.get("weight", 1.0))
    q = float(params.get("measure_ratio", 1.0))
    if not q > 0:
        raise InputError("measure_ratio must be positive")
    steps = []
    for k in range(d):
        for s in (-1, 1):
            e = [0] * d
            e[k] = s
            steps.append(tuple(e))

    def rule(x):
        nbrs = [(tuple(a + b for a, b in zip(x, e)), w) for e in steps]
        return nbrs, 0.0, q ** sum(abs(a) for a in x)

    def box(r):
        return [tuple(p) for p in itertools.product(range(-r, r + 1), repeat=d)]

    return GraphFamily(rule, (0,) * d, "lattice", {"d": d, "weight": w, "measure_ratio": q}, box)


def _tree(params):
    branching = [int(k) for k in params.get("branching", [2])]
    if not branching or min(branching) < 1:
        raise InputError("branching must be a nonempty list of positive integers")
    weights = [float(v) for v in params.get("weights", [1.0])]
    measures = [float(v) for v in params.get("measures", [1.0])]
    if min(measures) <= 0:
        raise InputError("tree measures must be positive")
    if min(weights) <= 0:
        raise InputError("tree weights must be positive")

    def at(seq, k):
        return seq[k] if k < len(seq) else seq[-1]

    def rule(x):
        depth = len(x)
        nbrs = []
        if depth:
            nbrs.append((x[:-1], at(weights, depth - 1)))
        nbrs += [(x + (i,), at(weights, depth)) for i in range(at(branching, depth))]
        return nbrs, 0.0, at(measures, depth)

    return GraphFamily(rule, (), "spherically_symmetric_tree",
                       {"branching": branching, "weights": weights, "measures": measures})


def _birth_death(params):
    weight, n_edges = _ratio_seq(params, "weights", "weight_ratio", 1.0)
    measure, n_meas = _ratio_seq(params, "measures", "measure_ratio", 1.0)
    kill = [float(v) for v in params.get("killing", [])]
    last = n_edges  # a finite chain has vertices 0..n_edges
    if n_meas is not None and (last is None or n_meas < last + 1):
        raise InputError("measures list shorter than the chain")
    if kill and min(kill) < 0:
        raise InputError("killing must be nonnegative")
    span = last if last is not None else 64
    for k in range(span + 1):
        if not measure(k) > 0:
            raise InputError(f"nonpositive measure at vertex {k}")
        if k < span and not weight(k) > 0:
            raise InputError(f"nonpositive edge weight at edge ({k}, {k + 1})")

    def killing(k):
        return kill[k] if k < len(kill) else 0.0

    def rule(x):
        nbrs = []
        if x > 0:
            nbrs.append((x - 1, weight(x - 1)))
        if last is None or x < last:
            nbrs.append((x + 1, weight(x)))
        return nbrs, killing(x), measure(x)

    tail = None
    if last is None and "measure_ratio" in params and float(params["measure_ratio"]) < 1:
        r = float(params["measure_ratio"])
        s = float(params.get("measure_ratio_scale", 1.0))
        tail = lambda k: s * r ** (k + 1) / (1 - r)  # noqa: E731  mass of vertices > k
    return GraphFamily(rule, 0, "birth_death", params, tail_mass=tail)


_GENERATORS = {
    "path": _path,
    "lattice": _lattice,
    "spherically_symmetric_tree": _tree,
    "tree": _tree,
    "birth_death": _birth_death,
}


def generate(kind: str, params: dict | None = None) -> GraphFamily:
    """Standard families.

    ``path``: ``{"n"}``; ``lattice``: ``{"d", "weight", "measure_ratio"}`` with
    ``m(x) = measure_ratio ** |x|_1``; ``spherically_symmetric_tree``:
    ``{"branching", "weights", "measures"}`` indexed by depth, last entry
    repeated; ``birth_death``: edge weights ``weights`` (finite list) or
    ``weight_ratio ** n``, measures likewise via ``measures`` /
    ``measure_ratio``, optional ``killing``.
    """
    try:
        build = _GENERATORS[kind]
    except KeyError:
        raise InputError(f"unknown generator kind {kind!r}") from None
    return build(dict(params or {}))
