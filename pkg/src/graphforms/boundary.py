"""Finite graphs with an explicit boundary and the calculus of boundary forms.

A :class:`GraphWithBoundary` splits its host vertices into an interior ``X``
(carrying the measure ``m`` and killing ``c``) and a boundary ``dX`` that
carries no l^2 mass, only the reference measure ``mu``.  All forms here act on
host functions; ``Q_1(f) = Q^N(f) + sum_X f^2 m`` throughout.

Everything is dense linear algebra: these models are desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .energy import NormalContraction, energy, form_matrix, laplacian_vector
from .errors import InputError
from .graph import Graph, connected_components, validate

EXACT_TOL = 1e-10
ORDER_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GraphWithBoundary:
    """Host graph whose vertices ``0..n_interior-1`` form ``X`` and the rest ``dX``.

    ``host.c`` vanishes on the boundary and ``host.m`` is 1 there (unused);
    the boundary reference measure is ``mu`` (defaults to the harmonic measure
    of interior vertex ``x0``).
    """

    host: Graph
    n_interior: int
    mu: np.ndarray

    @classmethod
    def build(cls, n_interior: int, n_boundary: int, edges: Iterable[tuple[int, int, float]],
              c: Sequence[float] | float = 0.0, m: Sequence[float] | float = 1.0,
              mu: Sequence[float] | None = None, x0: int = 0, labels: Sequence | None = None
              ) -> "GraphWithBoundary":
        if n_interior < 1:
            raise InputError("the interior must be nonempty")
        if n_boundary < 1:
            raise InputError("the boundary must be nonempty")
        n = n_interior + n_boundary
        cx = np.full(n_interior, float(c)) if np.isscalar(c) else np.asarray(c, float)
        mx = np.full(n_interior, float(m)) if np.isscalar(m) else np.asarray(m, float)
        if cx.shape != (n_interior,) or mx.shape != (n_interior,):
            raise InputError("c and m are given on the interior")
        host = Graph.from_edges(n, edges, np.concatenate([cx, np.zeros(n_boundary)]),
                                np.concatenate([mx, np.ones(n_boundary)]), labels)
        return cls.from_host(host, n_interior, mu, x0)

    @classmethod
    def from_host(cls, host: Graph, n_interior: int, mu=None, x0: int = 0) -> "GraphWithBoundary":
        bad = validate(host)
        if bad:
            raise InputError("; ".join(str(v) for v in bad))
        if not 1 <= n_interior < host.n:
            raise InputError("need a nonempty interior and a nonempty boundary")
        if np.any(host.c[n_interior:] != 0):
            raise InputError("killing lives on the interior only")
        for z in range(n_interior, host.n):
            if len(host.neighbors(z)[0]) == 0:
                raise InputError(f"boundary vertex {z} has no edge")
        for comp in connected_components(host):
            if min(comp) >= n_interior:
                raise InputError(f"boundary vertices {comp} are not connected to the interior")
        gb = cls(host, n_interior, np.ones(host.n - n_interior))
        if mu is None:
            mu = harmonic_measure(gb, x0)
            if np.any(mu <= 0):
                raise InputError(f"harmonic measure of {x0} vanishes somewhere; supply mu")
        mu = np.asarray(mu, float)
        if mu.shape != (host.n - n_interior,) or np.any(~(mu > 0)):
            raise InputError("mu must be strictly positive on every boundary vertex")
        return cls(host, n_interior, mu)

    def with_mu(self, mu) -> "GraphWithBoundary":
        return GraphWithBoundary.from_host(self.host, self.n_interior, mu)

    @property
    def n(self) -> int:
        return self.host.n

    @property
    def n_boundary(self) -> int:
        return self.host.n - self.n_interior

    @property
    def X(self) -> slice:
        return slice(0, self.n_interior)

    @property
    def dX(self) -> slice:
        return slice(self.n_interior, self.host.n)

    @property
    def m(self) -> np.ndarray:
        return self.host.m[self.X]

    @property
    def c(self) -> np.ndarray:
        return self.host.c[self.X]

    @cached_property
    def neumann_gram(self) -> np.ndarray:
        """Gram matrix of ``Q^N`` on host functions."""
        return form_matrix(self.host).toarray()

    @cached_property
    def mass(self) -> np.ndarray:
        """``diag(m)`` on the interior, zero on the boundary."""
        d = np.zeros(self.n)
        d[self.X] = self.m
        return np.diag(d)

    @cached_property
    def q1_gram(self) -> np.ndarray:
        return self.neumann_gram + self.mass

    @cached_property
    def extension(self) -> np.ndarray:
        """``H``: host values of the 1-harmonic extension of each boundary basis vector."""
        k = self.q1_gram
        X, dX = self.X, self.dX
        h = np.zeros((self.n, self.n_boundary))
        h[dX] = np.eye(self.n_boundary)
        h[X] = -la.solve(k[X, X], k[X, dX], assume_a="pos")
        return h

    def trace(self, f) -> np.ndarray:
        """``gamma f``: restriction to the boundary."""
        return np.asarray(f, float)[self.dX]

    def q1(self, f, g=None) -> float:
        """``Q_1(f, g) = Q^N(f, g) + sum_X f g m``."""
        f = np.asarray(f, float)
        g = f if g is None else np.asarray(g, float)
        return energy(self.host, f, g) + math.fsum(f[self.X] * g[self.X] * self.m)


# -- harmonic extension and decompositions ----------------------------------------

def harmonic_extension(gb: GraphWithBoundary, phi) -> np.ndarray:
    """``H phi``: ``(L + 1) H phi = 0`` on ``X`` and ``H phi = phi`` on ``dX``."""
    phi = np.asarray(phi, float)
    if phi.shape != (gb.n_boundary,):
        raise InputError("phi must be a boundary function")
    h = gb.extension @ phi
    h[gb.dX] = phi
    scale = max(float(np.max(np.abs(phi), initial=0.0)), 1e-300)
    res = np.max(np.abs(laplacian_vector(gb.host, h)[gb.X] + h[gb.X]), initial=0.0)
    if res > 1e-10 * scale * max(1.0, float(np.max(gb.host.deg[gb.X] / gb.m))):
        raise AssertionError(f"harmonic extension residual {res:.3e}")
    return h


def royden_decompose(gb: GraphWithBoundary, f) -> tuple[np.ndarray, np.ndarray]:
    """``f = f_0 + f_h`` with ``f_0 = 0`` on ``dX`` and ``f_h`` 1-harmonic."""
    f = np.asarray(f, float)
    fh = harmonic_extension(gb, gb.trace(f))
    f0 = f - fh
    f0[gb.dX] = 0.0
    return f0, fh


def royden_defect(gb: GraphWithBoundary, f) -> tuple[float, float]:
    """``|Q_1(f) - Q_1(f_0) - Q_1(f_h)|`` and the scale it is measured against."""
    f0, fh = royden_decompose(gb, f)
    a, b, c = gb.q1(f), gb.q1(f0), gb.q1(fh)
    return abs(a - b - c), max(a, b, c, 1e-300)


def harmonic_measure(gb: GraphWithBoundary, x: int) -> np.ndarray:
    """``mu_x(z) = H(delta_z)(x)`` for interior ``x``."""
    if not 0 <= x < gb.n_interior:
        raise InputError(f"{x} is not an interior vertex")
    return gb.extension[x].copy()


def maximum_principle_gap(gb: GraphWithBoundary, f, tol: float = 1e-12) -> float | None:
    """``min_X f`` when ``(L + 1) f >= 0`` on ``X`` and ``f >= 0`` on ``dX``; None otherwise.

    Both hypotheses are read with slack ``tol`` times the size of ``f``.
    """
    f = np.asarray(f, float)
    s = laplacian_vector(gb.host, f)[gb.X] + f[gb.X]
    scale = tol * max(1.0, float(np.max(np.abs(f), initial=0.0)))
    if np.any(s < -scale * max(1.0, float(np.max(gb.host.deg[gb.X] / gb.m)))) or np.any(f[gb.dX] < -scale):
        return None
    return float(np.min(f[gb.X]))


def comparison_holds(gb: GraphWithBoundary, f, g, tol: float = 1e-10) -> bool | None:
    """``f <= g`` on ``X`` given ``(L+1)f <= (L+1)g`` on ``X`` and ``f <= g`` on ``dX``."""
    f, g = np.asarray(f, float), np.asarray(g, float)
    d = g - f
    gap = maximum_principle_gap(gb, d)
    if gap is None:
        return None
    return gap >= -tol * max(1.0, float(np.max(np.abs(f))), float(np.max(np.abs(g))))


def harmonic_contraction_defect(gb: GraphWithBoundary, phi, C: NormalContraction) -> tuple[float, float]:
    """For ``f = C(H phi)``: boundary mismatch with ``H(C phi)`` and the harmonic-part error."""
    h = harmonic_extension(gb, phi)
    f = C(h)
    hc = harmonic_extension(gb, C(np.asarray(phi, float)))
    _, fh = royden_decompose(gb, f)
    return float(np.max(np.abs(f[gb.dX] - hc[gb.dX]))), float(np.max(np.abs(fh - hc)))


# -- forms --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HostForm:
    """A form on host functions: Gram matrix plus a boundary vanishing set.

    ``domain = {f : f = 0 on vanishing}`` (boundary positions ``0..n_boundary-1``).
    """

    gram: np.ndarray
    vanishing: frozenset = frozenset()
    name: str = ""

    def __call__(self, f, g=None) -> float:
        f = np.asarray(f, float)
        g = f if g is None else np.asarray(g, float)
        return float(f @ self.gram @ g)


@dataclass(frozen=True, eq=False)
class BoundaryForm:
    """Symmetric form on boundary functions, with domain ``{phi = 0 on vanishing}``."""

    q: np.ndarray
    vanishing: frozenset = frozenset()
    nu: np.ndarray | None = None
    wide_sense_dirichlet: bool | None = None
    name: str = ""

    def admissible(self, phi, tol: float = 0.0) -> bool:
        phi = np.asarray(phi, float)
        return all(abs(phi[z]) <= tol for z in self.vanishing)

    def __call__(self, phi, psi=None) -> float:
        phi = np.asarray(phi, float)
        psi = phi if psi is None else np.asarray(psi, float)
        if not (self.admissible(phi) and self.admissible(psi)):
            return math.inf
        return float(phi @ self.q @ psi)

    @property
    def free(self) -> np.ndarray:
        return np.array([z for z in range(self.q.shape[0]) if z not in self.vanishing], int)

    def restricted(self) -> np.ndarray:
        """Matrix on the free boundary coordinates."""
        f = self.free
        return self.q[np.ix_(f, f)]


def neumann_form(gb: GraphWithBoundary) -> HostForm:
    return HostForm(gb.neumann_gram, frozenset(), "neumann")


def dirichlet_form(gb: GraphWithBoundary) -> HostForm:
    return HostForm(gb.neumann_gram, frozenset(range(gb.n_boundary)), "dirichlet")


def arendt_warma_form(gb: GraphWithBoundary, F: Iterable[int], nu) -> HostForm:
    """``Q(f) = Q^N(f) + sum_{dX \\ F} f^2 nu`` on ``{f = 0 on F}``."""
    F = frozenset(int(z) for z in F)
    nu = np.asarray(nu, float)
    if nu.shape != (gb.n_boundary,) or np.any(nu < 0):
        raise InputError("nu must be a nonnegative boundary function")
    extra = np.zeros(gb.n)
    for z in range(gb.n_boundary):
        if z not in F:
            extra[gb.n_interior + z] = nu[z]
    return HostForm(gb.neumann_gram + np.diag(extra), F, "arendt-warma")


def _sample_contractions(q: BoundaryForm, rng: np.random.Generator, trials: int = 64) -> bool:
    free = q.free
    for _ in range(trials):
        phi = np.zeros(q.q.shape[0])
        phi[free] = rng.normal(scale=2.0, size=len(free))
        base = q(phi)
        clamped = q(np.clip(phi, 0.0, 1.0))
        if clamped > base + 1e-10 * max(1.0, abs(base)):
            return False
    return True


def dtn_form(gb: GraphWithBoundary, verify: bool = True) -> BoundaryForm:
    """``q^DN = Tr Q^N``, assembled column by column from boundary fluxes.

    ``q(phi, psi) = sum_z psi(z) Lambda phi(z)`` with
    ``Lambda phi(z) = sum_y b(z, y) (phi(z) - H phi(y))``.
    """
    nb = gb.n_boundary
    q = np.zeros((nb, nb))
    for k in range(nb):
        e = np.zeros(nb)
        e[k] = 1.0
        q[:, k] = boundary_flux(gb, harmonic_extension(gb, e))
    q = 0.5 * (q + q.T) if verify else q
    form = BoundaryForm(q, frozenset(), None, None, "dirichlet-to-neumann")
    if verify:
        for k in range(nb):
            e = np.zeros(nb)
            e[k] = 1.0
            direct = gb.q1(harmonic_extension(gb, e))
            if abs(direct - q[k, k]) > EXACT_TOL * max(1.0, abs(direct)):
                raise AssertionError(f"flux and energy disagree at boundary vertex {k}")
        if np.min(la.eigvalsh(q), initial=0.0) < -ORDER_TOL * max(1.0, float(np.max(np.abs(q)))):
            raise AssertionError("q^DN is not positive semidefinite")
        ok = _sample_contractions(form, np.random.default_rng(0))
        form = BoundaryForm(q, frozenset(), None, ok, "dirichlet-to-neumann")
    return form


def boundary_flux(gb: GraphWithBoundary, f) -> np.ndarray:
    """``sum_y b(z, y) (f(z) - f(y))`` at each boundary vertex."""
    f = np.asarray(f, float)
    out = np.zeros(gb.n_boundary)
    for k in range(gb.n_boundary):
        z = gb.n_interior + k
        idx, w = gb.host.neighbors(z)
        out[k] = math.fsum(w * (f[z] - f[idx]))
    return out


def check_sandwiched(gb: GraphWithBoundary, Q: HostForm) -> None:
    """Raise unless ``Q^N <= Q <= Q^D`` on the finite model."""
    d = Q.gram - gb.neumann_gram
    if not np.allclose(d, d.T, atol=ORDER_TOL, rtol=0):
        raise InputError("ordering violation: form is not symmetric")
    scale = max(1.0, float(np.max(np.abs(gb.neumann_gram))))
    X = gb.X
    if np.max(np.abs(d[X, :]), initial=0.0) > ORDER_TOL * scale:
        raise InputError("ordering violation: form differs from Q^N on interior-supported functions")
    free = [gb.n_interior + z for z in range(gb.n_boundary) if z not in Q.vanishing]
    if free:
        low = np.min(la.eigvalsh(d[np.ix_(free, free)]))
        if low < -ORDER_TOL * scale:
            raise InputError(f"ordering violation: Q - Q^N has eigenvalue {low:.3e} on the domain")


def trace_form(gb: GraphWithBoundary, Q: HostForm | tuple) -> BoundaryForm:
    """``Tr Q(phi) = Q_1(H phi)`` on boundary functions vanishing where ``Q``'s domain does.

    ``Q`` is a :class:`HostForm` between ``Q^N`` and ``Q^D`` or Arendt-Warma data ``(F, nu)``.
    """
    if isinstance(Q, tuple):
        Q = arendt_warma_form(gb, *Q)
    check_sandwiched(gb, Q)
    h = gb.extension
    q = h.T @ (Q.gram + gb.mass) @ h
    q = 0.5 * (q + q.T)
    nu = np.diag(Q.gram - gb.neumann_gram)[gb.dX].copy()
    return BoundaryForm(q, Q.vanishing, nu, None, f"trace of {Q.name}".strip())


def trace_identity_defect(gb: GraphWithBoundary, Q: HostForm, f) -> float:
    """``|Q_1(f) - Q^D_1(f_0) - Tr Q(gamma f)|`` for ``f`` in the domain of ``Q``."""
    f = np.asarray(f, float)
    f0, _ = royden_decompose(gb, f)
    tr = trace_form(gb, Q)
    lhs = Q(f) + math.fsum(f[gb.X] ** 2 * gb.m)
    return abs(lhs - gb.q1(f0) - tr(gb.trace(f)))


def normal_derivative_pairing(gb: GraphWithBoundary, f, g) -> float:
    """``d_n f(g) = Q^N(f, g) - sum_X Lf g m``."""
    f, g = np.asarray(f, float), np.asarray(g, float)
    lf = laplacian_vector(gb.host, f)[gb.X]
    return energy(gb.host, f, g) - math.fsum(lf * g[gb.X] * gb.m)


def normal_derivative(gb: GraphWithBoundary, f, mu=None) -> np.ndarray:
    """Density of the normal derivative with respect to ``mu``: ``flux(z) / mu(z)``."""
    mu = gb.mu if mu is None else np.asarray(mu, float)
    if np.any(~(mu > 0)):
        raise InputError("reference measure must be positive")
    return boundary_flux(gb, f) / mu


# -- Robin --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RobinSpec:
    """``beta : dX -> [0, inf]``; ``inf`` marks a hard zero condition."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, float)
        if np.any(np.isnan(b)) or np.any(b < 0):
            raise InputError("beta must be nonnegative")
        object.__setattr__(self, "beta", b)

    @classmethod
    def constant(cls, value: float, n_boundary: int) -> "RobinSpec":
        return cls(np.full(n_boundary, float(value)))

    @classmethod
    def from_mapping(cls, table: Mapping, order: Sequence) -> "RobinSpec":
        vals = []
        for z in order:
            v = table[z] if z in table else table.get(str(z), 0.0)
            vals.append(math.inf if v in ("inf", "Infinity", math.inf) else float(v))
        return cls(np.array(vals))

    @property
    def infinite(self) -> frozenset:
        """``F_beta``; ``mu > 0`` everywhere, so it is just ``{beta = inf}``."""
        return frozenset(int(z) for z in np.flatnonzero(np.isinf(self.beta)))


def robin_form(gb: GraphWithBoundary, beta: RobinSpec, mu=None) -> HostForm:
    """``Q^beta(f) = Q^N(f) + sum_{beta < inf} beta f^2 mu`` on ``{f = 0 on F_beta}``."""
    mu = gb.mu if mu is None else np.asarray(mu, float)
    if beta.beta.shape != (gb.n_boundary,):
        raise InputError("beta must be a boundary function")
    nu = np.where(np.isinf(beta.beta), 0.0, beta.beta) * mu
    form = arendt_warma_form(gb, beta.infinite, nu)
    return HostForm(form.gram, form.vanishing, "robin")


def _robin_blocks(gb: GraphWithBoundary, beta: RobinSpec, mu=None):
    form = robin_form(gb, beta, mu)
    free = np.array([gb.n_interior + z for z in range(gb.n_boundary) if z not in form.vanishing], int)
    return form.gram, free


def robin_extension(gb: GraphWithBoundary, beta: RobinSpec, f_interior, mu=None) -> np.ndarray:
    """Host function with the given interior values and Robin-stationary boundary values."""
    s, free = _robin_blocks(gb, beta, mu)
    f = np.zeros(gb.n)
    f[gb.X] = np.asarray(f_interior, float)
    if len(free):
        f[free] = -la.solve(s[np.ix_(free, free)], s[np.ix_(free, range(gb.n_interior))] @ f[gb.X],
                            assume_a="pos")
    return f


def robin_operator(gb: GraphWithBoundary, beta: RobinSpec, mu=None) -> np.ndarray:
    """Matrix of ``L^beta`` on interior functions, by exact boundary elimination."""
    s, free = _robin_blocks(gb, beta, mu)
    X = np.arange(gb.n_interior)
    schur = s[np.ix_(X, X)]
    if len(free):
        schur = schur - s[np.ix_(X, free)] @ la.solve(s[np.ix_(free, free)], s[np.ix_(free, X)],
                                                       assume_a="pos")
    schur = 0.5 * (schur + schur.T)
    return schur / gb.m[:, None]


def semigroup(op: np.ndarray, m: np.ndarray, t: float) -> np.ndarray:
    """``exp(-t op)`` for an operator symmetric in ``l^2(m)``."""
    r = np.sqrt(m)
    sym = (op * r[:, None]) / r[None, :]
    sym = 0.5 * (sym + sym.T)
    lam, v = la.eigh(sym)
    e = (v * np.exp(-t * lam)) @ v.T
    return (e / r[:, None]) * r[None, :]


@dataclass
class SandwichResult:
    t: float
    lower_slack: float  # min of exp(-tL^beta) - exp(-tL^inf)
    upper_slack: float  # min of exp(-tL^0) - exp(-tL^beta)
    passed: bool
    in_theorem: bool


def sandwich_check(gb: GraphWithBoundary, beta: RobinSpec, times: Sequence[float], mu=None,
                   slack: float = 1e-8) -> list[SandwichResult]:
    """Entrywise ``exp(-tL^inf) <= exp(-tL^beta) <= exp(-tL^0)``."""
    nb = gb.n_boundary
    ops = [robin_operator(gb, RobinSpec.constant(math.inf, nb), mu),
           robin_operator(gb, beta, mu),
           robin_operator(gb, RobinSpec.constant(0.0, nb), mu)]
    in_theorem = bool(np.all(gb.c == 0))
    out = []
    for t in times:
        d, r, n = (semigroup(op, gb.m, t) for op in ops)
        lo, hi = float(np.min(r - d)), float(np.min(n - r))
        out.append(SandwichResult(float(t), lo, hi, lo >= -slack and hi >= -slack, in_theorem))
    return out


# -- classification of forms by their traces -------------------------------------------

def form_from_boundary_data(gb: GraphWithBoundary, q: BoundaryForm, check_markov: bool = True) -> HostForm:
    """``Q(f) = Q^N(f) + q(gamma f) - q^DN(gamma f)`` on ``{gamma f in D(q)}``."""
    dn = dtn_form(gb).q
    diff = q.q - dn
    free = q.free
    if len(free):
        low = np.min(la.eigvalsh(0.5 * (diff + diff.T)[np.ix_(free, free)]))
        if low < -ORDER_TOL * max(1.0, float(np.max(np.abs(q.q)))):
            raise InputError(f"ordering violation: q - q^DN has eigenvalue {low:.3e}")
    if check_markov:
        excess = BoundaryForm(diff, q.vanishing)
        if not _sample_contractions(excess, np.random.default_rng(1)):
            raise InputError("q - q^DN is not Markovian on sampled clamps")
    g = gb.neumann_gram.copy()
    g[gb.dX, gb.dX] += diff
    return HostForm(g, q.vanishing, "from-boundary-data")


def extract_graph_from_form(Q, m, tol: float = 0.0) -> Graph:
    """``b_Q(x, y) = -Q(1_x, 1_y)`` and ``c_Q(x) = Q(1_x, 1)``."""
    a = np.asarray(Q.toarray() if sp.issparse(Q) else Q, float)
    if a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
        raise InputError("form matrix must be square and symmetric")
    off = a - np.diag(np.diag(a))
    if np.any(off > tol):
        x, y = np.argwhere(off > tol)[0]
        raise InputError(f"not a graph form: Q(1_{x}, 1_{y}) = {a[x, y]!r} > 0")
    b = -off
    c = np.array([math.fsum(row) for row in a])
    if np.any(c < -1e-12 * np.max(np.abs(a), initial=1.0)):
        raise InputError("not a graph form: negative killing")
    return Graph(sp.csr_matrix(b), np.maximum(c, 0.0), np.asarray(m, float))


def kasue_constant(gb: GraphWithBoundary, x: int) -> float:
    """Smallest ``C`` with ``sum_z f(z)^2 mu_x(z) <= C Q_1(f)`` for all host ``f``."""
    mux = harmonic_measure(gb, x)
    a = np.zeros((gb.n, gb.n))
    a[gb.dX, gb.dX] = np.diag(mux)
    return float(la.eigh(a, gb.q1_gram, eigvals_only=True)[-1])


def robin_pairing_defect(gb: GraphWithBoundary, beta: RobinSpec, mu=None) -> float:
    """Max over interior basis pairs of ``|<L^beta e_x, e_y>_m - Q^beta(e~_x, e~_y)|``."""
    op = robin_operator(gb, beta, mu)
    form = robin_form(gb, beta, mu)
    ext = [robin_extension(gb, beta, e, mu) for e in np.eye(gb.n_interior)]
    worst = 0.0
    for i in range(gb.n_interior):
        for j in range(gb.n_interior):
            lhs = op[j, i] * gb.m[j]
            worst = max(worst, abs(lhs - form(ext[i], ext[j])))
    return worst
