"""Capacities, equilibrium potentials, null sequences and recurrence verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .energy import energy
from .errors import HorizonError, InputError, SolverError
from .exhaustion import FiniteModel, solve_spd, truncate, window_converged
from .graph import Graph, GraphFamily, connected_components
from .metrics import EscapeResult, NotSummableError, escape_series, select_summable

VALUE_TOL = 1e-9


@dataclass
class CapacityResult:
    value: float
    potential: np.ndarray
    model: FiniteModel
    constrained: list[int]
    truncation: dict = field(default_factory=dict)


def _as_model(g, truncation, boundary="dirichlet") -> FiniteModel:
    if isinstance(g, FiniteModel):
        return g
    if isinstance(g, GraphFamily) and truncation is None:
        raise InputError("a truncation is required on a graph family")
    return truncate(g, truncation, boundary)


def _indices(model: FiniteModel, vertices: Iterable) -> list[int]:
    out = []
    for v in vertices:
        try:
            out.append(model.index(v))
        except KeyError:
            raise InputError(f"vertex {v!r} lies outside the truncation") from None
    return sorted(set(out))


def _measure_array(model: FiniteModel, m) -> np.ndarray:
    if m is None:
        return np.asarray(model.m)
    if callable(m):
        return np.array([float(m(v)) for v in model.vertices])
    arr = np.asarray(m, float)
    if arr.shape != (model.n,):
        raise InputError("measure must be given on the truncation interior")
    return arr


def _constrained_minimizer(a: sp.csr_matrix, fixed: list[int], n: int) -> np.ndarray:
    """Minimize ``f^T a f`` subject to ``f = 1`` on ``fixed``."""
    f = np.zeros(n)
    f[fixed] = 1.0
    free = np.setdiff1d(np.arange(n), fixed)
    if len(free) and len(fixed):
        rhs = -(a[free][:, fixed] @ np.ones(len(fixed)))
        f[free] = solve_spd(a[free][:, free], rhs)
    return f


def capacity(g, U: Iterable, truncation=None, m=None) -> CapacityResult:
    """``cap_m(U) = inf {Q(f) + ||f||^2 : f >= 1 on U}`` on a Dirichlet truncation.

    ``g`` is a graph, family (``truncation`` then required) or a ready
    :class:`FiniteModel`.  The minimizer is the equilibrium potential: 1 on
    ``U``, ``(L + 1) f = 0`` on the rest of the truncation, 0 outside.
    """
    model = _as_model(g, truncation)
    mm = _measure_array(model, m)
    fixed = _indices(model, U)
    k = (model.form + sp.diags(mm)).tocsr()
    f = _constrained_minimizer(k, fixed, model.n)
    if len(fixed) == 0:
        return CapacityResult(0.0, f, model, fixed, {"boundary": model.boundary})
    quad = float(f @ (k @ f))
    value = energy(model.graph, f) + math.fsum(mm * f * f)
    if model.boundary == "dirichlet":
        value += math.fsum(model.outflow * f * f)
    if abs(value - quad) > VALUE_TOL * max(1.0, abs(value)):
        raise SolverError(f"capacity value mismatch: {value!r} vs {quad!r}")
    lo, hi = float(np.min(f)), float(np.max(f))
    if lo < -1e-9 or hi > 1 + 1e-9:
        raise SolverError(f"equilibrium potential left [0, 1]: [{lo}, {hi}]")
    return CapacityResult(value, np.clip(f, 0.0, 1.0), model, fixed,
                          {"boundary": model.boundary, "interior": model.n})


def energy_capacity(g, F: Iterable, omega=None) -> tuple[float, np.ndarray, FiniteModel]:
    """Energy-only condenser value between ``F`` and the complement of ``omega``.

    The potential is 1 on ``F``, 0 outside ``omega`` and harmonic in between;
    ``omega`` is a hop radius, a vertex set or a prepared model.  Requires ``c = 0``.
    """
    model = _as_model(g, omega)
    if np.any(model.graph.c != 0):
        raise InputError("energy capacity needs c = 0")
    fixed = _indices(model, F)
    a = model.form
    phi = _constrained_minimizer(a, fixed, model.n)
    if not fixed:
        return 0.0, phi, model
    value = energy(model.graph, phi) + math.fsum(model.outflow * phi * phi)
    quad = float(phi @ (a @ phi))
    if abs(value - quad) > VALUE_TOL * max(1.0, abs(value)):
        raise SolverError(f"energy capacity mismatch: {value!r} vs {quad!r}")
    return value, np.clip(phi, 0.0, 1.0), model


# -- finite measures ---------------------------------------------------------------

MEASURE_POLICIES = ("sphere_normalized", "geometric", "given")


def finite_measure(hops: Sequence[int], sphere_sizes: dict[int, int] | None, policy: str,
                   given: np.ndarray | None = None) -> np.ndarray:
    """Vertex measure of a verdict run from hop distances to the root.

    ``geometric``: ``2**-h``; ``sphere_normalized``: ``2**-h / |S_h|`` (total mass
    at most 2 on every graph); ``given``: the graph's own measure.
    """
    h = np.asarray(hops, float)
    if policy == "geometric":
        return 2.0 ** -h
    if policy == "sphere_normalized":
        sizes = np.array([sphere_sizes[int(k)] for k in hops], float)
        return 2.0 ** -h / sizes
    if policy == "given":
        return np.asarray(given, float)
    raise InputError(f"unknown measure policy {policy!r}")


# -- boundary capacity profile -------------------------------------------------------

@dataclass
class ProfileLevel:
    inner_radius: int
    outer_radii: list[int]
    values: list[float]
    converged: bool
    value: float


@dataclass
class CapacityProfile:
    levels: list[ProfileLevel]
    measure_policy: str
    warnings: list[str] = field(default_factory=list)
    finite: bool = False

    @property
    def values(self) -> list[float]:
        return [lv.value for lv in self.levels]


def _family(g) -> GraphFamily:
    return g.as_family(0) if isinstance(g, Graph) else g


def boundary_capacity_profile(g, inner_radii: Sequence[int], outer_offsets: Sequence[int] = (8, 16, 24),
                              measure_policy: str = "sphere_normalized", atol: float = 1e-5,
                              rtol: float = 1e-3, max_vertices: int | None = 50_000) -> CapacityProfile:
    """``cap_m(X_n \\ B_j)`` for each inner radius ``j`` over outer hop balls ``X_n``.

    ``X_n`` carries the induced graph (edges leaving it are dropped), so the
    values increase with ``n`` towards ``cap_m(X \\ B_j)``.  Each level's limit
    is judged by a Cauchy window over the outer radii ``j + outer_offsets``.
    """
    fam = _family(g)
    offsets = sorted(int(k) for k in outer_offsets)
    levels: list[ProfileLevel] = []
    notes: list[str] = []
    finite = False
    for j in sorted(int(r) for r in inner_radii):
        try:
            order, hop = fam.ball(j + offsets[-1], max_vertices)
        except HorizonError as exc:
            notes.append(f"stopped at inner radius {j}: {exc}")
            break
        big, frontier, _ = fam.induced(order)
        hops = np.array([hop[v] for v in order])
        sizes: dict[int, int] = {}
        for h in hops.tolist():
            sizes[h] = sizes.get(h, 0) + 1
        m_all = finite_measure(hops, sizes, measure_policy, big.m)
        values, outer = [], []
        for off in offsets:
            k = int(np.searchsorted(hops, j + off, side="right"))
            sub = Graph(big.b[:k, :k], big.c[:k], big.m[:k], big.labels[:k])
            model = FiniteModel(sub, (), np.zeros(k), "neumann")
            U = [v for v, h in zip(order[:k], hops[:k]) if h > j]
            values.append(capacity(model, U, m=m_all[:k]).value)
            outer.append(j + off)
        exhausted = not frontier and hops.max(initial=0) <= j + offsets[0]
        conv = exhausted or window_converged(values, len(values), atol, rtol)
        levels.append(ProfileLevel(j, outer, values, bool(conv), values[-1]))
        if exhausted and hops.max(initial=0) <= j:
            finite = True
            break
    vals = [lv.value for lv in levels]
    if any(b > a * (1 + 1e-9) + 1e-15 for a, b in zip(vals, vals[1:])):
        notes.append("profile not nonincreasing in the inner radius")
    return CapacityProfile(levels, measure_policy, notes, finite)


# -- recurrence -------------------------------------------------------------------------

@dataclass
class RecurrenceOptions:
    tol_rec: float = 1e-3
    tol_trans: float = 1e-2
    inner_radii: tuple[int, ...] = tuple(2 ** k for k in range(12))
    outer_offsets: tuple[int, ...] = (8, 16, 24)
    profile_atol: float = 1e-5
    profile_rtol: float = 1e-3
    measure_policy: str = "sphere_normalized"
    transience_radii: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    transience_region: str = "auto"  # box for lattices, ball otherwise
    transience_rtol: float = 0.1
    window: int = 3
    max_vertices: int = 50_000


@dataclass
class RecurrenceVerdict:
    verdict: str  # Recurrent | Transient | Inconclusive
    reason: str
    profile: CapacityProfile | None
    transience_radii: list[int]
    transience_values: list[float]
    options: RecurrenceOptions
    heuristic: bool = True


def _transience_regions(fam: GraphFamily, opts: RecurrenceOptions):
    use_box = opts.transience_region == "box" or (
        opts.transience_region == "auto" and fam._box is not None)
    for r in opts.transience_radii:
        yield r, (fam.box(r) if use_box else fam.ball(r, opts.max_vertices)[0])


def recurrence_verdict(g, options: RecurrenceOptions | None = None) -> RecurrenceVerdict:
    """Recurrent / Transient / Inconclusive with the evidence that produced it.

    Recurrent: the boundary-capacity profile converges below ``tol_rec`` and
    decreases over at least three inner radii.  Transient: the energy capacity
    of ``B_1`` against growing regions (nonincreasing in the region) stabilizes
    within ``transience_rtol`` over the last ``window`` regions at a value
    ``>= tol_trans``.
    """
    opts = options or RecurrenceOptions()
    if isinstance(g, Graph):
        if len(connected_components(g)) > 1:
            raise InputError("recurrence verdicts need a connected graph")
        if np.any(g.c != 0):
            return RecurrenceVerdict("Transient", "not recurrent (killing present)", None, [], [], opts, False)
    fam = _family(g)
    probe, _ = fam.ball(max(opts.transience_radii), opts.max_vertices)
    if any(fam.killing(v) != 0 for v in probe):
        return RecurrenceVerdict("Transient", "not recurrent (killing present)", None, [], [], opts, False)

    profile = boundary_capacity_profile(fam, opts.inner_radii, opts.outer_offsets, opts.measure_policy,
                                        opts.profile_atol, opts.profile_rtol, opts.max_vertices)
    if profile.finite:
        return RecurrenceVerdict("Recurrent", "finite connected graph: 1 is a null sequence",
                                 profile, [], [], opts, False)
    lv = profile.levels
    if (len(lv) >= 3 and all(x.converged for x in lv[-3:]) and lv[-1].value < opts.tol_rec
            and lv[-3].value > lv[-2].value > lv[-1].value):
        return RecurrenceVerdict("Recurrent",
                                 f"boundary capacity {lv[-1].value:.3e} < tol_rec at inner radius "
                                 f"{lv[-1].inner_radius}", profile, [], [], opts)

    ball1, _ = fam.ball(1)
    radii, values = [], []
    for r, region in _transience_regions(fam, opts):
        if not set(ball1) <= set(region):
            continue
        val, _, model = energy_capacity(fam, ball1, region)
        radii.append(r)
        values.append(val)
        if not model.frontier:
            break
    w = opts.window
    if len(values) >= w:
        tail = values[-w:]
        stable = (max(tail) - min(tail)) <= opts.transience_rtol * max(tail)
        if stable and min(tail) >= opts.tol_trans:
            return RecurrenceVerdict("Transient",
                                     f"energy capacity of B_1 stabilized at {tail[-1]:.4e} >= tol_trans",
                                     profile, radii, values, opts)
    return RecurrenceVerdict("Inconclusive", "neither the recurrence nor the transience rule fired",
                             profile, radii, values, opts)


# -- null sequences and escape functions ---------------------------------------------------------

@dataclass
class NullTerm:
    inner: int
    outer: int
    vertices: tuple
    phi: np.ndarray
    energy: float


def null_sequence(g, pairs: Sequence[tuple[int, int]]) -> list[NullTerm]:
    """Potentials ``phi_n`` equal to 1 on ``B_inner`` and supported in ``B_outer``."""
    fam = _family(g)
    out = []
    for inner, outer in pairs:
        if outer < inner:
            raise InputError("outer radius below inner radius")
        F, _ = fam.ball(inner)
        q, phi, model = energy_capacity(fam, F, int(outer))
        out.append(NullTerm(inner, outer, model.vertices, phi, q))
        if not model.frontier:
            break
    return out


def escape_function(g, terms: Sequence[NullTerm]) -> EscapeResult:
    """Finite-energy function growing without bound along the selected null terms.

    A greedy subsequence with ``Q(phi_i) <= 4**-i`` is used; the result is
    ``sum_i (1 - phi_i)`` on the largest truncation plus its frontier, and the
    plateau minima are ``min f`` over ``{phi_i = 0}``.
    """
    fam = _family(g)
    pick = select_summable([t.energy for t in terms])
    if not pick:
        raise NotSummableError("no term satisfies the energy budget; sequence is not null")
    chosen = [terms[i] for i in pick]
    radius = max(t.outer for t in chosen) + 1
    host = fam.materialize(radius)
    funcs = []
    for t in chosen:
        idx = {v: k for k, v in enumerate(t.vertices)}
        funcs.append(np.array([t.phi[idx[v]] if v in idx else 0.0 for v in host.labels]))
    res = escape_series(host, funcs)
    return res
