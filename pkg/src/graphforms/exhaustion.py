"""Finite truncations, resolvent and heat solves, monotone-limit drivers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import form_matrix
from .errors import InputError, SolverError
from .graph import Graph, GraphFamily

DENSE_LIMIT = 500
RESIDUAL_TOL = 1e-10
HEAT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """Truncation of a graph to an interior vertex set.

    With ``boundary="dirichlet"`` edges leaving the interior are absorbed as
    extra diagonal (functions vanish on the frontier); with ``"neumann"`` they
    are dropped.
    """

    graph: Graph
    frontier: tuple
    outflow: np.ndarray
    boundary: str = "dirichlet"
    hop: np.ndarray | None = None

    @property
    def vertices(self) -> tuple:
        return self.graph.labels

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> np.ndarray:
        return self.graph.m

    def index(self, v) -> int:
        return self.graph.index(v)

    @cached_property
    def form(self) -> sp.csr_matrix:
        """Gram matrix of the truncated energy (absorbing diagonal included)."""
        a = form_matrix(self.graph)
        if self.boundary == "dirichlet":
            a = (a + sp.diags(self.outflow)).tocsr()
        return a

    @cached_property
    def operator(self) -> sp.csr_matrix:
        a = self.form.tocoo()
        return sp.csr_matrix((a.data / self.m[a.row], (a.row, a.col)), shape=a.shape)

    @cached_property
    def _eig(self) -> tuple[np.ndarray, np.ndarray]:
        s = _symmetrized(self)
        return la.eigh(s.toarray())


def _symmetrized(model: FiniteModel) -> sp.csr_matrix:
    r = sp.diags(1.0 / np.sqrt(model.m))
    return (r @ model.form @ r).tocsr()


def truncate(g: Graph | GraphFamily, region, boundary: str = "dirichlet", root=None) -> FiniteModel:
    """Restrict ``g`` to a hop ball (``region`` an int radius) or an explicit vertex set.

    For a finite :class:`Graph` vertices are indices and the root defaults to 0;
    ``region=None`` keeps the whole graph.
    """
    if boundary not in ("dirichlet", "neumann"):
        raise InputError(f"unknown boundary condition {boundary!r}")
    hop = None
    fam = g.as_family(0 if root is None else root) if isinstance(g, Graph) else g
    if region is None:
        if not isinstance(g, Graph):
            raise InputError("a region is required to truncate a family")
        vertices = list(range(g.n))
    elif isinstance(region, (int, np.integer)):
        vertices, hops = fam.ball(int(region))
        hop = np.array([hops[v] for v in vertices])
    else:
        vertices = list(region)
    host, frontier, outflow = fam.induced(vertices)
    return FiniteModel(host, tuple(frontier), outflow, boundary, hop)


def solve_spd(a: sp.spmatrix, rhs: np.ndarray, tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Solve a symmetric positive definite system.

    Dense Cholesky up to ``DENSE_LIMIT`` unknowns, Jacobi-preconditioned CG above.
    The backward error ``|a u - rhs| / (|a| |u| + |rhs|)`` must stay below ``tol``.
    """
    rhs = np.asarray(rhs, float)
    n = rhs.shape[0]
    if n == 0:
        return rhs.copy()
    if not np.any(rhs):
        return np.zeros_like(rhs)
    if n <= DENSE_LIMIT:
        # conditioning is judged by the backward error below, not by rcond
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", la.LinAlgWarning)
            u = la.solve(a.toarray() if sp.issparse(a) else a, rhs, assume_a="pos")
    else:
        a = sp.csr_matrix(a)
        d = a.diagonal()
        pre = spla.LinearOperator(a.shape, matvec=lambda x: x / d)
        u, info = spla.cg(a, rhs, rtol=tol * 1e-3, atol=0.0, M=pre, maxiter=20 * n)
        if info < 0:
            raise SolverError("conjugate gradient breakdown")
    res = _backward_error(a, u, rhs)
    if not res <= tol:
        if n > DENSE_LIMIT:
            u = spla.spsolve(sp.csc_matrix(a), rhs)
            res = _backward_error(a, u, rhs)
        if not res <= tol:
            raise SolverError(f"solve missed residual contract ({res:.3e} > {tol:.1e})", res)
    return u


def _backward_error(a, u, rhs) -> float:
    r = a @ u - rhs
    absa = abs(a) if sp.issparse(a) else np.abs(a)
    scale = absa @ np.abs(u) + np.abs(rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(scale > 0, np.abs(r) / scale, np.abs(r))
    return float(np.max(q))


def resolvent_solve(model: FiniteModel, alpha: float, f) -> np.ndarray:
    """``u`` with ``(L_n + alpha) u = f`` on the model interior."""
    if not alpha > 0:
        raise InputError("alpha must be positive")
    f = np.asarray(f, float)
    if f.shape != (model.n,):
        raise InputError("f must be defined on the model interior")
    a = (model.form + alpha * sp.diags(model.m)).tocsr()
    u = solve_spd(a, model.m * f)
    if np.all(f >= 0) and np.any(u < -1e-12 * max(1.0, float(np.max(np.abs(u))))):
        raise SolverError("resolvent of a nonnegative function has a negative entry")
    return u


def heat_apply(model: FiniteModel, t: float, f) -> np.ndarray:
    """``exp(-t L_n) f``; dense eigendecomposition up to ``DENSE_LIMIT`` unknowns,
    Krylov ``expm_multiply`` above."""
    if t < 0:
        raise InputError("t must be nonnegative")
    f = np.asarray(f, float)
    if t == 0:
        return f.copy()
    root = np.sqrt(model.m)
    if model.n <= DENSE_LIMIT:
        lam, vec = model._eig
        out = (vec @ (np.exp(-t * lam) * (vec.T @ (root * f)))) / root
    else:
        out = spla.expm_multiply(-t * _symmetrized(model), root * f) / root
    if np.all((f >= 0) & (f <= 1)):
        lo, hi = float(np.min(out)), float(np.max(out))
        if lo < -HEAT_TOL or hi > 1 + HEAT_TOL:
            raise SolverError(f"heat semigroup left [0, 1]: range [{lo:.3e}, {hi:.3e}]")
    return out


@dataclass(frozen=True)
class ExhaustionSchedule:
    """Increasing truncation radii and the Cauchy-window stopping rule."""

    radii: tuple[int, ...]
    window: int = 3
    atol: float = 1e-10
    rtol: float = 1e-8
    region: str = "ball"

    def __post_init__(self):
        r = tuple(int(x) for x in self.radii)
        object.__setattr__(self, "radii", r)
        if not r or any(b <= a for a, b in zip(r, r[1:])):
            raise InputError("schedule radii must be nonempty and strictly increasing")
        if self.window < 2:
            raise InputError("convergence window must be at least 2")
        if self.region not in ("ball", "box"):
            raise InputError(f"unknown region kind {self.region!r}")

    def region_for(self, g: Graph | GraphFamily, r: int):
        if self.region == "box":
            if not isinstance(g, GraphFamily):
                raise InputError("box regions need a lattice family")
            return g.box(r)
        return r


@dataclass
class LimitResult:
    value: float
    radii: list[int]
    values: list[float]
    verdict: str  # Converged | Monotone-but-open | Nonmonotone
    direction: str  # nondecreasing | nonincreasing | constant | none
    window: int = 3
    tolerance: dict = field(default_factory=dict)


def window_converged(values: Sequence[float], window: int, atol: float, rtol: float) -> bool:
    if len(values) < window:
        return False
    tail = values[-window:]
    if not all(math.isfinite(v) for v in tail):
        return False
    spread = max(tail) - min(tail)
    return spread <= atol + rtol * max(abs(v) for v in tail)


def monotone_direction(values: Sequence[float], slack: float = 0.0) -> str:
    d = np.diff(np.asarray(values, float))
    if len(d) == 0 or np.all(np.abs(d) <= slack):
        return "constant"
    if np.all(d >= -slack):
        return "nondecreasing"
    if np.all(d <= slack):
        return "nonincreasing"
    return "none"


def monotone_limit(g: Graph | GraphFamily, schedule: ExhaustionSchedule,
                   functional: Callable[[FiniteModel], float],
                   boundary: str = "dirichlet") -> LimitResult:
    """Evaluate ``functional`` on the truncations of ``schedule`` and judge the limit."""
    values: list[float] = []
    radii: list[int] = []
    exhausted = False
    for r in schedule.radii:
        model = truncate(g, schedule.region_for(g, r), boundary)
        values.append(float(functional(model)))
        radii.append(r)
        if not model.frontier and schedule.region == "ball":
            exhausted = True  # the ball already holds the whole (finite) component
            break
    if not values:
        raise InputError("schedule exhausted before any evaluation")
    direction = monotone_direction(values, schedule.atol)
    if exhausted or window_converged(values, schedule.window, schedule.atol, schedule.rtol):
        verdict = "Converged"
    elif direction != "none":
        verdict = "Monotone-but-open"
    else:
        verdict = "Nonmonotone"
    return LimitResult(values[-1], radii, values, verdict, direction, schedule.window,
                       {"atol": schedule.atol, "rtol": schedule.rtol})


def restrict(values: np.ndarray, model: FiniteModel, vertices: Iterable) -> np.ndarray:
    """Values of a model function on given vertices (zero outside the interior)."""
    out = []
    for v in vertices:
        try:
            out.append(values[model.index(v)])
        except KeyError:
            out.append(0.0)
    return np.asarray(out, float)
