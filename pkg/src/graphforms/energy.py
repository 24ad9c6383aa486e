"""Energy form, formal Laplacian, Green's formula and normal contractions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import HorizonError, InputError
from .graph import Graph, GraphFamily


class TruncationWarning(UserWarning):
    """Quantity of an infinite graph evaluated on a finite horizon."""


def _values(g: Graph | GraphFamily, f, horizon: int | None) -> tuple[Graph, np.ndarray]:
    if isinstance(g, GraphFamily):
        if horizon is None:
            raise InputError("a horizon is required to evaluate on a graph family")
        host = g.materialize(horizon)
        if isinstance(f, Mapping):
            extra = set(f) - set(host.labels)
            if any(f[v] != 0 for v in extra):
                raise HorizonError(f"function support exceeds horizon {horizon}")
            vals = np.array([float(f.get(v, 0.0)) for v in host.labels])
        else:
            vals = np.array([float(f(v)) for v in host.labels])
        warnings.warn(f"evaluated on the radius-{horizon} ball of {g.name}", TruncationWarning,
                      stacklevel=3)
        return host, vals
    vals = np.asarray(f, dtype=float)
    if vals.shape != (g.n,):
        raise InputError(f"function has shape {vals.shape}, graph has {g.n} vertices")
    return g, vals


def _edge_arrays(g: Graph):
    up = sp.triu(g.b, k=1).tocoo()
    order = np.lexsort((up.col, up.row))
    return up.row[order], up.col[order], up.data[order]


def energy(g: Graph | GraphFamily, f, f2=None, horizon: int | None = None) -> float:
    """``Q(f)`` or, with ``f2``, the bilinear ``Q(f, f2)``.

    Returns ``inf`` when the sum does not produce a finite value.  Families are
    evaluated on the induced graph of the ``horizon`` ball (with a warning).
    """
    g, u = _values(g, f, horizon)
    v = u if f2 is None else _values(g, f2, None)[1]
    i, j, w = _edge_arrays(g)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.concatenate([w * (u[i] - u[j]) * (v[i] - v[j]), g.c * u * v])
        total = math.fsum(terms) if np.all(np.isfinite(terms)) else math.inf
    if f2 is None and not math.isfinite(total):
        return math.inf
    return total


def form_matrix(g: Graph) -> sp.csr_matrix:
    """Gram matrix of ``Q``: ``diag(deg + c) - b``."""
    b = g.b.copy()
    b.setdiag(0)
    b.eliminate_zeros()
    return (sp.diags(np.asarray(g.deg) + g.c) - b).tocsr()


def laplacian_matrix(g: Graph) -> sp.csr_matrix:
    """Matrix of the formal Laplacian: ``-b(x,y)/m(x)`` off the diagonal,
    ``(deg(x) + c(x))/m(x)`` on it."""
    a = form_matrix(g).tocoo()
    return sp.csr_matrix((a.data / g.m[a.row], (a.row, a.col)), shape=a.shape)


def laplacian_apply(g: Graph | GraphFamily, f, x, horizon: int | None = None) -> float:
    """``Lf(x) = (1/m(x)) [sum_y b(x,y)(f(x) - f(y)) + c(x) f(x)]``."""
    if isinstance(g, GraphFamily):
        fx = float(f(x))
        terms = [w * (fx - float(f(y))) for y, w in g.neighbors(x)]
        if horizon is not None:
            warnings.warn("pointwise Laplacian of a family", TruncationWarning, stacklevel=2)
        return math.fsum([*terms, g.killing(x) * fx]) / g.measure(x)
    u = np.asarray(f, dtype=float)
    idx, w = g.neighbors(x)
    terms = w * (u[x] - u[idx])
    return math.fsum([*terms.tolist(), float(g.c[x]) * u[x]]) / float(g.m[x])


def laplacian_vector(g: Graph, f) -> np.ndarray:
    """``Lf`` at every vertex, compensated per vertex."""
    return np.array([laplacian_apply(g, f, x) for x in range(g.n)])


def _green_scale(g: Graph, f: np.ndarray, phi: np.ndarray) -> float:
    i, j, w = _edge_arrays(g)
    s = w * (np.abs(phi[i]) + np.abs(phi[j])) * (np.abs(f[i]) + np.abs(f[j]))
    return float(np.sum(s) + np.sum(g.c * np.abs(f * phi))) or 1.0


def greens_defect(g: Graph, f, phi) -> float:
    """``|Q(phi, f) - sum_x phi(x) Lf(x) m(x)|`` for finitely supported ``phi``."""
    u, p = np.asarray(f, float), np.asarray(phi, float)
    lf = laplacian_vector(g, u)
    return abs(energy(g, p, u) - math.fsum(p * lf * g.m))


def greens_symmetric_defect(g: Graph, f, phi) -> float:
    """``|sum L(phi) f m - sum phi Lf m|``."""
    u, p = np.asarray(f, float), np.asarray(phi, float)
    return abs(math.fsum(laplacian_vector(g, p) * u * g.m) - math.fsum(p * laplacian_vector(g, u) * g.m))


def green_scale(g: Graph, f, phi) -> float:
    """Magnitude of the summands in Green's formula; defects are measured against it."""
    return _green_scale(g, np.asarray(f, float), np.asarray(phi, float))


@dataclass(frozen=True)
class NormalContraction:
    """A map ``C`` with ``C(0) = 0`` and ``|C(u) - C(w)| <= |u - w|``."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


IDENTITY = NormalContraction("identity", lambda t: t.copy())
ABSOLUTE = NormalContraction("absolute", np.abs)
POSITIVE_PART = NormalContraction("positive_part", lambda t: np.maximum(t, 0.0))
NEGATIVE_PART = NormalContraction("negative_part", lambda t: np.maximum(-t, 0.0))
CAP_ONE = NormalContraction("min_one", lambda t: np.minimum(t, 1.0))


def clamp(a: float, b: float) -> NormalContraction:
    if not a <= 0 <= b:
        raise InputError("clamp needs a <= 0 <= b")
    return NormalContraction(f"clamp[{a},{b}]", lambda t: np.clip(t, a, b))


STANDARD_CONTRACTIONS = (ABSOLUTE, POSITIVE_PART, clamp(-0.5, 0.5), CAP_ONE)


def _check_contraction(C: NormalContraction, samples: np.ndarray) -> None:
    pts = np.unique(np.concatenate([samples, np.linspace(-3, 3, 25), [0.0]]))
    vals = C(pts)
    if abs(C(np.array([0.0]))[0]) > 0:
        raise InputError(f"{C.name}: C(0) != 0")
    du = np.abs(pts[:, None] - pts[None, :])
    dc = np.abs(vals[:, None] - vals[None, :])
    if np.any(dc > du * (1 + 1e-12) + 1e-15):
        raise InputError(f"{C.name} is not 1-Lipschitz on sampled pairs")


def contraction_check(g: Graph, f, C: NormalContraction) -> tuple[float, float, bool]:
    """``(Q(Cf), Q(f), Q(Cf) <= Q(f))`` with relative slack ``1e-12``."""
    u = np.asarray(f, float)
    _check_contraction(C, u[:200])
    qc, q = energy(g, C(u)), energy(g, u)
    return qc, q, qc <= q + 1e-12 * q
