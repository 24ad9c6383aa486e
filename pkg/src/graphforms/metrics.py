"""Intrinsic and adapted pseudometrics on graphs."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .energy import energy
from .errors import HorizonError, InputError
from .graph import Graph, GraphFamily

INTRINSIC_SLACK = 1e-12


def _nbrs(g: Graph | GraphFamily, x) -> list[tuple[Any, float]]:
    if isinstance(g, GraphFamily):
        return list(g.neighbors(x))
    idx, w = g.neighbors(x)
    return list(zip(idx.tolist(), w.tolist()))


def _measure(g: Graph | GraphFamily, x) -> float:
    return g.measure(x) if isinstance(g, GraphFamily) else float(g.m[x])


def _vertices(g: Graph | GraphFamily, vertices) -> list:
    if vertices is not None:
        return list(vertices)
    if isinstance(g, GraphFamily):
        raise InputError("explicit vertices are required for a graph family")
    return list(range(g.n))


class Pseudometric:
    """Symmetric ``sigma >= 0`` with ``sigma(x, x) = 0``.

    Either an explicit matrix over vertex indices or an oracle on vertex keys.
    """

    def __init__(self, matrix=None, oracle: Callable[[Any, Any], float] | None = None):
        if (matrix is None) == (oracle is None):
            raise InputError("give exactly one of matrix or oracle")
        self.matrix = None
        if matrix is not None:
            s = np.asarray(matrix, float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise InputError("pseudometric matrix must be square")
            if np.any(s < 0) or np.any(np.diag(s) != 0) or not np.array_equal(s, s.T):
                raise InputError("pseudometric matrix must be symmetric, nonnegative, zero on the diagonal")
            self.matrix = s
        self._oracle = oracle

    def __call__(self, x, y) -> float:
        if self.matrix is not None:
            return float(self.matrix[x, y])
        if x == y:
            return 0.0
        return float(self._oracle(x, y))

    def scaled(self, k: float) -> "Pseudometric":
        if self.matrix is not None:
            return Pseudometric(k * self.matrix)
        base = self._oracle
        return Pseudometric(oracle=lambda x, y: k * base(x, y))

    def distance_to_set(self, x, U: Iterable) -> float:
        """``sigma_U(x) = inf_{y in U} sigma(x, y)``."""
        return min(self(x, y) for y in U)


class EdgeWeights:
    """Symmetric nonnegative weights on edges, as a function of an edge."""

    def __init__(self, fn: Callable[[Any, Any], float]):
        self._fn = fn

    def __call__(self, x, y) -> float:
        return float(self._fn(x, y))

    @classmethod
    def constant(cls, value: float = 1.0) -> "EdgeWeights":
        return cls(lambda x, y: value)

    @classmethod
    def from_dict(cls, table: dict) -> "EdgeWeights":
        sym = dict(table)
        sym.update({(y, x): w for (x, y), w in table.items()})
        return cls(lambda x, y: sym[(x, y)])

    @classmethod
    def degree_adapted(cls, g: Graph | GraphFamily) -> "EdgeWeights":
        """``w(x, y) = min(Deg(x), Deg(y)) ** -1/2``, adapted to ``m`` for every graph."""

        def deg(x):
            c = g.killing(x) if isinstance(g, GraphFamily) else float(g.c[x])
            return (math.fsum(w for _, w in _nbrs(g, x)) + c) / _measure(g, x)

        return cls(lambda x, y: 1.0 / math.sqrt(max(deg(x), deg(y))))


@dataclass
class IntrinsicResult:
    intrinsic: bool
    ratio: float
    witness: Any


def is_intrinsic(g: Graph | GraphFamily, sigma, vertices=None, m=None) -> IntrinsicResult:
    """Check ``1/2 sum_y b(x,y) sigma(x,y)^2 <= m(x)`` at the given vertices.

    ``sigma`` may be a :class:`Pseudometric` or :class:`EdgeWeights` (adaptedness).
    ``m`` overrides the graph measure (array for graphs, callable for families).
    """
    worst, witness = 0.0, None
    for x in _vertices(g, vertices):
        terms = []
        for y, w in _nbrs(g, x):
            try:
                s = sigma(x, y)
            except (KeyError, IndexError) as exc:
                raise InputError(f"sigma undefined on neighbor pair ({x!r}, {y!r})") from exc
            terms.append(w * s * s)
        load = 0.5 * math.fsum(terms)
        mx = _measure(g, x) if m is None else (m(x) if callable(m) else float(m[x]))
        if mx > 0:
            ratio = load / mx
        else:
            ratio = 0.0 if load == 0 else math.inf
        if witness is None or ratio > worst:
            worst, witness = ratio, x
    return IntrinsicResult(worst <= 1 + INTRINSIC_SLACK, worst, witness)


def dijkstra(source, neighbors: Callable[[Any], Iterable[tuple[Any, float]]],
             limit: float = math.inf) -> dict:
    """Shortest path lengths from ``source`` (nonnegative lengths, zeros allowed)."""
    dist = {source: 0.0}
    done = set()
    counter = itertools.count()
    heap = [(0.0, next(counter), source)]
    while heap:
        d, _, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        if d > limit:
            break
        for y, length in neighbors(x):
            nd = d + length
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                heapq.heappush(heap, (nd, next(counter), y))
    return {x: dist[x] for x in done}


@dataclass
class PathDistance:
    value: float
    horizon_limited: bool = False


def _edge_neighbors(g: Graph | GraphFamily, w: EdgeWeights, allowed=None):
    def nb(x):
        for y, _ in _nbrs(g, x):
            if allowed is None or y in allowed:
                yield y, w(x, y)
    return nb


def path_metric(g: Graph | GraphFamily, w: EdgeWeights, x, y, horizon: int | None = None) -> PathDistance:
    """``d_w(x, y)`` over paths inside the horizon (hop ball around ``x`` for families)."""
    allowed = None
    if isinstance(g, GraphFamily):
        if horizon is None:
            raise InputError("a horizon is required on a graph family")
        allowed = {x}
        layer = [x]
        for _ in range(horizon):
            layer = list(dict.fromkeys(z for v in layer for z, _ in g.neighbors(v) if z not in allowed))
            allowed.update(layer)
    dist = dijkstra(x, _edge_neighbors(g, w, allowed))
    if y in dist:
        return PathDistance(dist[y])
    # on a finite graph the search was exhaustive, so the flag only marks the +inf tag
    return PathDistance(math.inf, horizon_limited=True)


def path_metric_matrix(g: Graph, w: EdgeWeights) -> np.ndarray:
    """All-pairs ``d_w`` on a finite graph (``inf`` between components)."""
    out = np.full((g.n, g.n), math.inf)
    nb = _edge_neighbors(g, w)
    for x in range(g.n):
        for y, d in dijkstra(x, nb).items():
            out[x, y] = d
    return np.minimum(out, out.T)  # both search directions differ only by rounding


def hop_metric(g: Graph) -> Pseudometric:
    """Combinatorial graph distance (finite graph, connected components only)."""
    d = path_metric_matrix(g, EdgeWeights.constant(1.0))
    return Pseudometric(d)


def family_hop_metric(fam: GraphFamily, max_vertices: int = 1_000_000) -> Pseudometric:
    """Combinatorial distance on a family (closed form on lattices, BFS otherwise)."""
    if fam.name == "lattice":
        return Pseudometric(oracle=lambda x, y: float(sum(abs(a - b) for a, b in zip(x, y))))
    cache: dict = {}

    def oracle(x, y):
        if x not in cache:
            cache[x] = {x: 0}
        hop = cache[x]
        if y in hop:
            return float(hop[y])
        frontier = [v for v, h in hop.items() if h == max(hop.values())]
        while y not in hop:
            if not frontier or len(hop) > max_vertices:
                return math.inf
            nxt = []
            for v in frontier:
                for z, _ in fam.neighbors(v):
                    if z not in hop:
                        hop[z] = hop[v] + 1
                        nxt.append(z)
            frontier = nxt
        return float(hop[y])

    return Pseudometric(oracle=oracle)


def triangle_violations(sigma: Pseudometric | np.ndarray, n: int | None = None,
                        rng: np.random.Generator | None = None, tol: float = 1e-12) -> list[tuple]:
    """Triples with ``sigma(x,z) > sigma(x,y) + sigma(y,z)``.

    Exhaustive up to 30 vertices, 1000 random triples beyond.
    """
    s = sigma.matrix if isinstance(sigma, Pseudometric) else np.asarray(sigma, float)
    n = s.shape[0]
    if n <= 30:
        lhs = s[:, None, :]
        rhs = s[:, :, None] + s[None, :, :]
        with np.errstate(invalid="ignore"):
            bad = np.argwhere(lhs > rhs + tol * np.maximum(1.0, rhs))
        return [tuple(int(v) for v in (x, y, z)) for x, y, z in bad]
    rng = rng or np.random.default_rng(0)
    out = []
    for x, y, z in rng.integers(0, n, size=(1000, 3)):
        if s[x, z] > s[x, y] + s[y, z] + tol * max(1.0, s[x, y] + s[y, z]):
            out.append((int(x), int(y), int(z)))
    return out


def metric_from_function(g: Graph, f) -> tuple[Pseudometric, np.ndarray]:
    """``sigma_f(x, y) = |f(x) - f(y)|`` and ``m_f(x) = 1/2 sum_y b(x,y) sigma_f(x,y)^2``."""
    u = np.asarray(f, float)
    if not math.isfinite(energy(g, u)):
        raise InputError("f has infinite energy")
    sigma = Pseudometric(np.abs(u[:, None] - u[None, :]))
    mf = np.array([0.5 * math.fsum(w * (u[x] - u[y]) ** 2 for y, w in _nbrs(g, x))
                   for x in range(g.n)])
    return sigma, mf


@dataclass
class BallProfile:
    radii: list[float]
    counts: list[int]
    measures: list[float]
    jump_size: float
    vertices: list = field(default_factory=list)  # vertices of the largest ball


def ball_profile(g: Graph | GraphFamily, sigma, o, radii: Sequence[float],
                 horizon: int | None = None, m=None) -> BallProfile:
    """Counts and measures of ``B_r(o) = {y : sigma(o, y) <= r}`` and the jump size.

    On a family ``sigma`` is evaluated on the hop ball of radius ``horizon``;
    a ball touching its outermost layer raises :class:`HorizonError`.
    """
    radii = sorted(float(r) for r in radii)
    if isinstance(g, GraphFamily):
        if horizon is None:
            raise InputError("a horizon is required on a graph family")
        order, hop = g.ball(horizon)
        dist = {y: sigma(o, y) for y in order}
        rmax = radii[-1]
        if any(hop[y] == horizon and dist[y] <= rmax for y in order) and horizon > 0:
            raise HorizonError(f"hop horizon {horizon} too small for radius {rmax}")
        meas = {y: (g.measure(y) if m is None else m(y)) for y in order}
    else:
        order = list(range(g.n))
        dist = {y: sigma(o, y) for y in order}
        meas = {y: float(g.m[y] if m is None else m[y]) for y in order}
    counts, measures = [], []
    for r in radii:
        inside = [y for y in order if dist[y] <= r]
        counts.append(len(inside))
        measures.append(math.fsum(meas[y] for y in inside))
    big = [y for y in order if dist[y] <= radii[-1]]
    members = set(big)
    jump = 0.0
    for x in big:
        for y, _ in _nbrs(g, x):
            if y in members:
                jump = max(jump, sigma(x, y))
    return BallProfile(radii, counts, measures, jump, big)


def lipschitz_energy_bound_check(g: Graph, sigma: Pseudometric, f, C: float, U: Iterable[int],
                                 m=None) -> tuple[float, float, bool]:
    """``Q(f) <= C^2 min{m(X), 2 m(X \\ U)}`` for ``f`` ``C``-Lipschitz and constant on ``U``."""
    if np.any(g.c != 0):
        raise InputError("the Lipschitz energy bound needs c = 0")
    mm = g.m if m is None else np.asarray(m, float)
    U = sorted(set(U))
    if not is_intrinsic(g, sigma, m=mm).intrinsic:
        raise InputError("sigma is not intrinsic for the measure")
    u = np.asarray(f, float)
    if U and np.ptp(u[U]) > 0:
        raise InputError("f is not constant on U")
    rest = np.ones(g.n, bool)
    rest[U] = False
    bound = C * C * min(math.fsum(mm), 2 * math.fsum(mm[rest]))
    q = energy(g, u)
    return q, bound, q <= bound + 1e-12 * max(1.0, bound)


def distance_function(g: Graph, sigma: Pseudometric, U: Iterable[int]) -> np.ndarray:
    U = list(U)
    return np.array([sigma.distance_to_set(x, U) for x in range(g.n)])


# -- escape functions -----------------------------------------------------------

class NotSummableError(InputError):
    """The supplied energies do not decay fast enough for the geometric rule."""


def geometric_budget(i: int) -> float:
    """Energy budget of the ``i``-th term (1-based) of an escape series."""
    return 4.0 ** (-i)


def select_summable(energies: Sequence[float]) -> list[int]:
    """Greedy subsequence with ``Q_i <= 4**-i`` for the ``i``-th selected term."""
    chosen: list[int] = []
    for k, q in enumerate(energies):
        if q <= geometric_budget(len(chosen) + 1):
            chosen.append(k)
    return chosen


@dataclass
class EscapeResult:
    f: np.ndarray
    energy: float
    plateau_minima: list[float]
    energies: list[float]
    sigma: Pseudometric | None = None
    measure: np.ndarray | None = None


def escape_series(g: Graph, functions: Sequence, plateaus: Sequence[Iterable[int]] | None = None
                  ) -> EscapeResult:
    """``f = sum_i (1 - f_i)`` for functions ``f_i -> 1`` on growing sets.

    The ``i``-th term must satisfy ``Q(1 - f_i) <= 4**-i`` so that the partial
    sums are Cauchy for the energy seminorm; ``f >= i`` on the ``i``-th plateau,
    which defaults to ``{f_i = 0}``.
    """
    if not functions:
        raise InputError("no functions supplied")
    terms = [1.0 - np.asarray(fi, float) for fi in functions]
    energies = [energy(g, t) for t in terms]
    for i, q in enumerate(energies, start=1):
        if not q <= geometric_budget(i):
            raise NotSummableError(
                f"term {i} has energy {q:.3e} > 4^-{i}; energies not summable under the rule")
    f = np.sum(terms, axis=0)
    minima = []
    for i, fi in enumerate(functions):
        region = (np.flatnonzero(np.asarray(fi) == 0) if plateaus is None
                  else np.fromiter(plateaus[i], int))
        minima.append(float(np.min(f[region])) if len(region) else math.nan)
    return EscapeResult(f, energy(g, f), minima, energies)


def escape_metric(g: Graph, functions: Sequence, plateaus=None) -> EscapeResult:
    """Escape function plus the intrinsic pseudometric it induces."""
    res = escape_series(g, functions, plateaus)
    res.sigma, res.measure = metric_from_function(g, res.f)
    return res


# -- Hopf-Rinow ------------------------------------------------------------------

@dataclass
class HopfRinowReport:
    radii: list[float]
    ball_counts: list[int]
    ball_touches_frontier: list[bool]
    escape_bound: float
    complete_within_horizon: bool
    horizon: int


def hopf_rinow_check(g: Graph | GraphFamily, w: EdgeWeights, horizon: int,
                     radii: Sequence[float] | None = None, root=None) -> HopfRinowReport:
    """Finite ``d_w`` balls and a lower bound on the length of escaping paths.

    Every infinite path from the root crosses the outermost layer of the hop
    ball of radius ``horizon``; its ``d_w`` distance bounds the path length.
    """
    fam = g.as_family(0 if root is None else root) if isinstance(g, Graph) else g
    order, hop = fam.ball(horizon)
    members = set(order)
    for x in order:
        if not math.isfinite(math.fsum(v for _, v in fam.neighbors(x))):
            raise InputError(f"vertex {x!r} has infinite degree")
    dist = dijkstra(fam.root, _edge_neighbors(fam, w, members))
    outer = [y for y in order if hop[y] == horizon and any(z not in members for z, _ in fam.neighbors(y))]
    bound = min((dist[y] for y in outer), default=math.inf)
    radii = sorted(radii) if radii is not None else [float(r) for r in range(horizon + 1)]
    counts = [sum(1 for y in order if dist.get(y, math.inf) <= r) for r in radii]
    touches = [any(dist[y] <= r for y in outer) for r in radii]
    return HopfRinowReport(list(radii), counts, touches, bound, bound > radii[-1], horizon)
