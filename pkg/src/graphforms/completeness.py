"""Stochastic completeness, volume-growth integrals and Liouville hypotheses."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .energy import energy, laplacian_vector
from .errors import InputError, SolverError
from .exhaustion import (ExhaustionSchedule, FiniteModel, heat_apply, resolvent_solve, truncate,
                         window_converged)
from .graph import Graph, GraphFamily, scaled_degree
from .metrics import _measure, ball_profile, is_intrinsic

TOL_INC = 0.05
TOL_COMP = 1e-6
MONOTONE_SLACK = 1e-9


def _family(g) -> GraphFamily:
    return g.as_family(0) if isinstance(g, Graph) else g


@dataclass
class CompletenessReport:
    alpha: float
    radii: list[int]
    root_values: list[float]
    sup_values: list[float]
    reference_radius: int
    verdict: str  # CompleteConsistent | IncompleteCertified | Inconclusive
    label: str = ""
    heat_samples: list[tuple[float, Any, float]] = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)


def canonical_alpha_harmonic(g, alpha: float, schedule: ExhaustionSchedule,
                             tol_inc: float = TOL_INC, tol_comp: float = TOL_COMP,
                             reference_radius: int | None = None) -> CompletenessReport:
    """Track ``u_n = 1 - alpha (L_n + alpha)^{-1} 1`` over Dirichlet truncations.

    ``u_n`` decreases to the largest bounded ``alpha``-harmonic function below 1,
    which vanishes exactly for stochastically complete graphs.  The sup is taken
    over the reference ball (default radius ``radii[0] // 2``) so that the
    absorbing frontier of each level does not enter it.
    """
    fam = _family(g)
    ref = schedule.radii[0] // 2 if reference_radius is None else int(reference_radius)
    ref_vertices, _ = fam.ball(ref)
    radii, roots, sups = [], [], []
    prev: dict | None = None
    exhausted = False
    for r in schedule.radii:
        model = truncate(fam, schedule.region_for(fam, r))
        if np.any(model.graph.c != 0):
            raise InputError("stochastic completeness is tested for c = 0")
        u = 1.0 - alpha * resolvent_solve(model, alpha, np.ones(model.n))
        if np.min(u) < -1e-10 or np.max(u) > 1 + 1e-10:
            raise SolverError("u_n left [0, 1]")
        u = np.clip(u, 0.0, 1.0)
        cur = dict(zip(model.vertices, u.tolist()))
        if prev is not None:
            for v, val in prev.items():
                if cur.get(v, 0.0) > val + MONOTONE_SLACK:
                    raise SolverError(f"u_n increased at {v!r} across truncations")
        prev = cur
        radii.append(r)
        roots.append(cur[fam.root])
        sups.append(max(cur.get(v, 0.0) for v in ref_vertices))
        if not model.frontier:
            exhausted = True
            break
    tols = {"tol_inc": tol_inc, "tol_comp": tol_comp, "atol": schedule.atol, "rtol": schedule.rtol,
            "window": schedule.window}
    if sups[-1] <= tol_comp:
        verdict, label = "CompleteConsistent", "sup of u_n over the reference ball below tol_comp"
    elif not exhausted and window_converged(roots, schedule.window, schedule.atol, schedule.rtol) \
            and roots[-1] >= tol_inc:
        verdict = "IncompleteCertified"
        label = "stabilized, not proven positive in the limit"
    else:
        verdict, label = "Inconclusive", ""
    return CompletenessReport(alpha, radii, roots, sups, ref, verdict, label, [], tols)


@dataclass
class HeatMassProfile:
    times: list[float]
    radii: list[int]
    values: list[list[float]]  # values[level][time]


def heat_mass_profile(g, times: Sequence[float], x, schedule: ExhaustionSchedule) -> HeatMassProfile:
    """``(exp(-t L_n) 1)(x)`` per truncation level; nondecreasing in ``n``."""
    fam = _family(g)
    table, radii = [], []
    for r in schedule.radii:
        model = truncate(fam, schedule.region_for(fam, r))
        if np.any(model.graph.c != 0):
            raise InputError("heat mass profiles are defined for c = 0")
        i = model.index(x)
        row = [float(heat_apply(model, t, np.ones(model.n))[i]) for t in times]
        if table and any(a < b - 1e-8 for a, b in zip(row, table[-1])):
            raise SolverError("heat mass decreased across truncations")
        table.append(row)
        radii.append(r)
        if not model.frontier:
            break
    return HeatMassProfile(list(times), radii, table)


# -- volume growth ---------------------------------------------------------------

def log_sharp(t: float) -> float:
    """``log#(t) = max(log t, 1)``."""
    return max(math.log(t), 1.0)


@dataclass
class GrowthIntegral:
    radii: list[float]
    volumes: list[float]
    integrand: list[float]
    partial_integral: float
    classification: str  # DivergentLikely | ConvergentLikely | Unknown
    growth_exponent: float
    rule: str
    heuristic: bool = True


GRIGORYAN_RULE = ("fit p = slope of log(log# m(B_r)) against log r on the upper half of the grid; "
                  "DivergentLikely if p <= 2, ConvergentLikely if p >= 2.5, Unknown otherwise")


def _growth_exponent(radii: np.ndarray, volumes: np.ndarray) -> float:
    half = radii >= radii[-1] / 2
    keep = half & (radii > 0)
    if keep.sum() < 2:
        return math.nan
    y = np.log([log_sharp(v) for v in volumes[keep]])
    x = np.log(radii[keep])
    return float(np.polyfit(x, y, 1)[0])


def grigoryan_integral(g, sigma, o, r_max: float, step: float = 1.0, horizon: int | None = None,
                       check_vertices=None) -> GrowthIntegral:
    """Trapezoid value of ``int_0^R r / log#(m(B_r)) dr`` and a growth heuristic."""
    grid = np.arange(0.0, r_max + step / 2, step)
    if check_vertices is None and isinstance(g, Graph):
        check_vertices = range(g.n)
    if check_vertices is not None and not is_intrinsic(g, sigma, check_vertices).intrinsic:
        raise InputError("sigma is not intrinsic")
    prof = ball_profile(g, sigma, o, grid, horizon)
    if any(not math.isfinite(v) for v in prof.measures):
        raise InputError("infinite ball observed")
    if check_vertices is None and isinstance(g, GraphFamily):
        if not is_intrinsic(g, sigma, prof.vertices).intrinsic:
            raise InputError("sigma is not intrinsic on the observed balls")
    vols = np.asarray(prof.measures)
    integrand = grid / np.array([log_sharp(v) for v in vols])
    total = float(np.trapezoid(integrand, grid))
    p = _growth_exponent(grid, vols)
    if math.isnan(p):
        cls = "Unknown"
    elif p <= 2.0:
        cls = "DivergentLikely"
    elif p >= 2.5:
        cls = "ConvergentLikely"
    else:
        cls = "Unknown"
    return GrowthIntegral(grid.tolist(), vols.tolist(), integrand.tolist(), total, cls, p, GRIGORYAN_RULE)


@dataclass
class KarpIntegral:
    radii: list[float]
    norms: list[float]
    integrand: list[float]
    partial_integral: float
    p: float
    jump_size: float


def karp_integral(g, u: Callable[[Any], float], p: float, sigma, o, r0: float, r_max: float,
                  step: float = 1.0, horizon: int | None = None) -> KarpIntegral:
    """Trapezoid value of ``int_{r0}^R r / ||u 1_{B_r}||_p^p dr``."""
    if not 1 < p < math.inf:
        raise InputError("p must lie in (1, inf)")
    grid = np.arange(float(r0), r_max + step / 2, step)
    prof = ball_profile(g, sigma, o, grid, horizon)
    if not math.isfinite(prof.jump_size):
        raise InputError("jump size is not finite")
    dist = {y: sigma(o, y) for y in prof.vertices}
    norms = []
    for r in grid:
        norms.append(math.fsum(abs(u(y)) ** p * _measure(g, y) for y in prof.vertices if dist[y] <= r))
    if norms[0] == 0:
        raise InputError("u vanishes on B_{r0}")
    integrand = grid / np.asarray(norms)
    return KarpIntegral(grid.tolist(), norms, integrand.tolist(), float(np.trapezoid(integrand, grid)),
                        p, prof.jump_size)


@dataclass
class YauReport:
    radii: list[float]
    sup_degree: list[float]
    bounded: list[bool]


def yau_hypothesis_report(g, sigma, o, radii: Sequence[float], horizon: int | None = None) -> YauReport:
    """``sup_{B_r} Deg`` per radius."""
    radii = sorted(float(r) for r in radii)
    prof = ball_profile(g, sigma, o, radii, horizon)
    dist = {y: sigma(o, y) for y in prof.vertices}

    def deg(y):
        if isinstance(g, GraphFamily):
            return (math.fsum(w for _, w in g.neighbors(y)) + g.killing(y)) / g.measure(y)
        return scaled_degree(g, y)

    sups = [max((deg(y) for y in prof.vertices if dist[y] <= r), default=0.0) for r in radii]
    return YauReport(radii, sups, [math.isfinite(s) for s in sups])


# -- paths of finite mass ----------------------------------------------------------

@dataclass
class PathMassReport:
    status: str  # certified-none | finite-mass certified | finite-mass suspect | growing
    mass: float
    path: list
    sphere_minima: list[float]
    tail_bound: float | None = None


def path_mass_search(g, horizon: int, budget: int | None = None, tail_tol: float = 1e-3,
                     m: Callable[[Any], float] | None = None) -> PathMassReport:
    """Cheapest path (vertex costs ``m``) from the root to the outer layer of the horizon ball."""
    fam = _family(g)
    order, hop = fam.ball(horizon, budget)
    members = set(order)
    mass_of = m or fam.measure
    outer = [y for y in order if hop[y] == horizon and any(z not in members for z, _ in fam.neighbors(y))]
    minima = []
    dist, parent = {fam.root: mass_of(fam.root)}, {fam.root: None}
    counter = itertools.count()
    heap = [(dist[fam.root], next(counter), fam.root)]
    done = set()
    while heap:
        d, _, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, _w in fam.neighbors(x):
            if y not in members:
                continue
            nd = d + mass_of(y)
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                parent[y] = x
                heapq.heappush(heap, (nd, next(counter), y))
    for k in range(horizon + 1):
        layer = [dist[y] for y in order if hop[y] == k]
        if layer:
            minima.append(min(layer))
    if not outer:
        return PathMassReport("certified-none", math.inf, [], minima)
    end = min(outer, key=lambda y: dist[y])
    path = []
    y = end
    while y is not None:
        path.append(y)
        y = parent[y]
    path.reverse()
    mass = dist[end]
    tail = fam.tail_mass(horizon) if fam.tail_mass is not None else None
    if tail is not None:
        status = "finite-mass certified"
    else:
        mid = minima[len(minima) // 2]
        status = "finite-mass suspect" if mass - mid <= tail_tol * mass else "growing"
    return PathMassReport(status, mass, path, minima, tail)


# -- cut-off inequality and subharmonic witnesses -------------------------------------

def cutoff_inequality_check(g: Graph, u, phi) -> tuple[float, float, bool]:
    """``Q(u phi) <= sum phi^2 Lu u m + 1/2 sum b(x,y) u(x)^2 (phi(x) - phi(y))^2``."""
    u, phi = np.asarray(u, float), np.asarray(phi, float)
    lhs = energy(g, u * phi)
    lu = laplacian_vector(g, u)
    first = phi * phi * lu * u * g.m
    second = []
    for x in range(g.n):
        idx, w = g.neighbors(x)
        second.extend((0.5 * w * u[x] ** 2 * (phi[x] - phi[idx]) ** 2).tolist())
    rhs = math.fsum([*first.tolist(), *second])
    scale = math.fsum(np.abs(first)) + math.fsum(second) + abs(lhs)
    return lhs, rhs, lhs <= rhs + 1e-10 * max(scale, 1e-300)


@dataclass
class WitnessReport:
    nonnegative: bool
    max_subharmonic_defect: float
    lp_norm: float
    checked_vertices: int
    witness: bool


def subharmonic_witness_check(g: Graph | FiniteModel, u, alpha: float, p: float = 2.0,
                              tol: float = 1e-8) -> WitnessReport:
    """Check ``u >= 0`` and ``(L + alpha) u <= 0`` where ``L`` is fully known.

    On a :class:`FiniteModel` only vertices without edges leaving the truncation
    are checked; the ``l^p`` norm is the partial sum over the region.
    """
    if isinstance(g, FiniteModel):
        host, inner = g.graph, np.flatnonzero(g.outflow == 0)
    else:
        host, inner = g, np.arange(g.n)
    u = np.asarray(u, float)
    lu = laplacian_vector(host, u) + alpha * u
    defect = float(np.max(lu[inner])) if len(inner) else -math.inf
    norm = math.fsum(np.abs(u) ** p * host.m) ** (1 / p)
    nonneg = bool(np.all(u >= 0))
    return WitnessReport(nonneg, defect, norm, len(inner), nonneg and defect <= tol)
