import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as la

from graphforms import (BoundaryForm, Graph, GraphWithBoundary, InputError, RobinSpec, dtn_form,
                        extract_graph_from_form, form_from_boundary_data, harmonic_extension,
                        harmonic_measure, kasue_constant, normal_derivative, robin_form, robin_operator,
                        royden_decompose, sandwich_check, trace_form)
from graphforms.boundary import (arendt_warma_form, boundary_flux, comparison_holds, dirichlet_form,
                                 harmonic_contraction_defect, maximum_principle_gap, neumann_form,
                                 normal_derivative_pairing, robin_extension, robin_pairing_defect,
                                 royden_defect, semigroup, trace_identity_defect)
from graphforms.energy import NormalContraction, form_matrix

from conftest import random_boundary_model, random_graph, three_vertex


def exact_extension(ni, nb, edges, m, phi):
    """Gaussian elimination in rationals for (L + 1) h = 0 on X, h = phi on dX."""
    n = ni + nb
    b = [[Fraction(0)] * n for _ in range(n)]
    for u, v, w in edges:
        b[u][v] = b[v][u] = Fraction(w)
    a = [[Fraction(0)] * (ni + 1) for _ in range(ni)]
    for x in range(ni):
        a[x][x] = sum(b[x]) + Fraction(m[x])
        for y in range(n):
            if y < ni and y != x:
                a[x][y] -= b[x][y]
            elif y >= ni:
                a[x][ni] += b[x][y] * Fraction(phi[y - ni])
    for col in range(ni):
        piv = next(r for r in range(col, ni) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for r in range(ni):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [p - f * q for p, q in zip(a[r], a[col])]
    return [a[x][ni] / a[x][x] for x in range(ni)] + [Fraction(p) for p in phi]


# -- worked model ---------------------------------------------------------------------

def test_three_vertex_exact_values():
    gb = three_vertex()
    assert harmonic_extension(gb, [1.0, 0.0])[0] == pytest.approx(1 / 3, abs=1e-12)
    assert harmonic_extension(gb, [1.0, 1.0])[0] == pytest.approx(2 / 3, abs=1e-12)
    np.testing.assert_array_equal(harmonic_extension(gb, [0.0, 0.0]), 0.0)
    np.testing.assert_allclose(harmonic_measure(gb, 0), [1 / 3, 1 / 3], atol=1e-12)
    q = dtn_form(gb)
    np.testing.assert_allclose(q.q, [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], atol=1e-12)
    assert q([1.0, 0.0]) == pytest.approx(2 / 3, abs=1e-12) and q.wide_sense_dirichlet
    # Q_1(H(1,0)) = 5/9 + 1/9 from the edges plus the interior mass term
    h = harmonic_extension(gb, [1.0, 0.0])
    assert gb.q1(h) == pytest.approx(5 / 9 + 1 / 9, abs=1e-12)
    for beta, expected in ((math.inf, 2.0), (0.0, 0.0), (1.0, 0.5)):
        op = robin_operator(gb, RobinSpec.constant(beta, 2))
        np.testing.assert_allclose(op, [[expected]], atol=1e-12)
    np.testing.assert_allclose(robin_extension(gb, RobinSpec.constant(1.0, 2), [1.0]), [1, 0.75, 0.75],
                               atol=1e-12)
    np.testing.assert_allclose(robin_extension(gb, RobinSpec.constant(0.0, 2), [2.0]), [2, 2, 2],
                               atol=1e-12)


def test_three_vertex_against_rationals():
    edges = [(0, 1, 1), (0, 2, 1)]
    for phi in ([1, 0], [0, 1], [3, -2], [Fraction(1, 7), 5]):
        exact = exact_extension(1, 2, edges, [1], phi)
        h = harmonic_extension(three_vertex(), [float(p) for p in phi])
        np.testing.assert_allclose(h, [float(v) for v in exact], atol=1e-12)


def test_random_models_against_rationals(rng):
    for _ in range(20):
        ni, nb = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        edges = [(int(rng.integers(0, x)), x, int(rng.integers(1, 4))) for x in range(1, ni)]
        edges += [(int(rng.integers(0, ni)), z, int(rng.integers(1, 4))) for z in range(ni, ni + nb)]
        m = [int(v) for v in rng.integers(1, 4, ni)]
        gb = GraphWithBoundary.build(ni, nb, edges, 0.0, m)
        phi = [int(v) for v in rng.integers(-3, 4, nb)]
        exact = exact_extension(ni, nb, edges, m, phi)
        np.testing.assert_allclose(harmonic_extension(gb, np.array(phi, float)),
                                   [float(v) for v in exact], atol=1e-12)


def test_construction_errors():
    with pytest.raises(InputError):
        GraphWithBoundary.build(1, 0, [])
    with pytest.raises(InputError):
        GraphWithBoundary.build(0, 2, [(0, 1, 1.0)])
    with pytest.raises(InputError):
        GraphWithBoundary.build(1, 2, [(0, 1, 1.0)])  # second boundary vertex isolated
    with pytest.raises(InputError):
        GraphWithBoundary.build(1, 2, [(0, 1, 1.0), (0, 2, 1.0)], mu=[1.0, 0.0])


def test_strong_edge_concentrates_harmonic_measure():
    gb = GraphWithBoundary.build(1, 2, [(0, 1, 1e6), (0, 2, 1.0)], mu=[1.0, 1.0])
    mu = harmonic_measure(gb, 0)
    assert mu.sum() >= 0.999 and mu[0] > 0.999 and mu.sum() < 1


# -- Royden decomposition and principles ---------------------------------------------

def test_royden_examples(rng):
    gb = three_vertex()
    h = harmonic_extension(gb, [0.3, -1.2])
    f0, fh = royden_decompose(gb, h)
    np.testing.assert_allclose(f0, 0.0, atol=1e-15)
    f0, fh = royden_decompose(gb, np.array([2.0, 0.0, 0.0]))
    np.testing.assert_array_equal(fh, 0.0)
    for _ in range(50):
        defect, scale = royden_defect(gb, rng.normal(size=3))
        assert defect <= 1e-12 * scale


def test_royden_bounds(rng):
    for _ in range(50):
        gb = random_boundary_model(rng, killing=True)
        f = rng.uniform(-1.0, 2.0, gb.n)
        _, fh = royden_decompose(gb, f)
        assert fh.min() >= -1.0 - 1e-12 and fh.max() <= 2.0 + 1e-12


def test_principles_on_random_models(rng):
    for _ in range(100):
        gb = random_boundary_model(rng, killing=bool(rng.integers(2)))
        defect, scale = royden_defect(gb, rng.normal(size=gb.n))
        assert defect <= 1e-9 * scale
        # superharmonic construction: (L+1)^{-1}(nonneg) on X plus H(nonneg)
        k = gb.neumann_gram[gb.X, gb.X] + np.diag(gb.m)
        f = np.zeros(gb.n)
        f[gb.X] = la.solve(k, rng.random(gb.n_interior) * gb.m)
        f += harmonic_extension(gb, rng.random(gb.n_boundary))
        gap = maximum_principle_gap(gb, f)
        assert gap is not None and gap >= -1e-10
        g = f + harmonic_extension(gb, rng.random(gb.n_boundary))
        assert comparison_holds(gb, f, g)
        mass = harmonic_extension(gb, np.ones(gb.n_boundary))[gb.X]
        assert np.all(mass < 1)


def test_maximum_principle_hypotheses_detected():
    gb = three_vertex()
    assert maximum_principle_gap(gb, np.array([1.0, -1.0, 0.0])) is None
    assert maximum_principle_gap(gb, np.array([-1.0, 0.0, 0.0])) is None


def test_harmonic_measures_share_null_sets(rng):
    for _ in range(20):
        gb = random_boundary_model(rng)
        supp = [harmonic_measure(gb, x) > 0 for x in range(gb.n_interior)]
        assert all(np.array_equal(s, supp[0]) for s in supp)
        assert all(harmonic_measure(gb, x).sum() < 1 for x in range(gb.n_interior))


def test_contraction_compatibility(rng):
    monotone = [NormalContraction("clamp01", lambda v: np.clip(v, 0.0, 1.0)),
                NormalContraction("positive", lambda v: np.maximum(v, 0.0))]
    for _ in range(50):
        gb = random_boundary_model(rng)
        phi = rng.normal(size=gb.n_boundary)
        for C in monotone:
            bd, hd = harmonic_contraction_defect(gb, phi, C)
            assert bd == 0.0 and hd <= 1e-9


# -- Dirichlet-to-Neumann and traces --------------------------------------------------

def test_dtn_with_boundary_edge():
    gb = GraphWithBoundary.build(1, 2, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 0.5)])
    q = dtn_form(gb)
    base = dtn_form(three_vertex())
    phi = np.array([1.0, 0.0])
    assert q(phi) == pytest.approx(base(phi) + 0.5, abs=1e-12)
    assert q(phi) == pytest.approx(gb.q1(harmonic_extension(gb, phi)), abs=1e-12)


def test_dtn_homogeneity_and_random(rng):
    gb = three_vertex()
    q = dtn_form(gb)
    assert q(np.full(2, 3.0)) == pytest.approx(9 * q(np.ones(2)))
    for _ in range(30):
        gb = random_boundary_model(rng, killing=True)
        q = dtn_form(gb)
        assert np.allclose(q.q, q.q.T) and q.wide_sense_dirichlet
        assert la.eigvalsh(q.q).min() >= -1e-10
        phi = rng.normal(size=gb.n_boundary)
        direct = gb.q1(harmonic_extension(gb, phi))
        assert q(phi) == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_trace_examples(rng):
    gb = three_vertex()
    np.testing.assert_allclose(trace_form(gb, neumann_form(gb)).q, dtn_form(gb).q, atol=1e-12)
    td = trace_form(gb, dirichlet_form(gb))
    assert len(td.free) == 0 and td(np.zeros(2)) == 0.0 and td(np.ones(2)) == math.inf
    for _ in range(30):
        gb = random_boundary_model(rng)
        beta = RobinSpec(rng.uniform(0, 10, gb.n_boundary))
        tr = trace_form(gb, robin_form(gb, beta))
        np.testing.assert_allclose(tr.q - dtn_form(gb).q, np.diag(beta.beta * gb.mu), atol=1e-9)
        f = rng.normal(size=gb.n)
        assert trace_identity_defect(gb, robin_form(gb, beta), f) <= 1e-9 * max(1.0, gb.q1(f))


def test_trace_rejects_unordered_form():
    gb = three_vertex()
    bad = neumann_form(gb).gram.copy()
    bad[1, 1] -= 0.5
    from graphforms.boundary import HostForm
    with pytest.raises(InputError, match="ordering violation"):
        trace_form(gb, HostForm(bad))


def test_normal_derivative(rng):
    gb = three_vertex()
    h = harmonic_extension(gb, [1.0, 0.0])
    np.testing.assert_allclose(boundary_flux(gb, h), [2 / 3, -1 / 3], atol=1e-12)
    assert normal_derivative(gb, h)[0] == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_array_equal(normal_derivative(gb, np.full(3, 5.0)), 0.0)
    np.testing.assert_allclose(normal_derivative(gb, h, 2 * gb.mu), normal_derivative(gb, h) / 2)
    for _ in range(30):
        gb = random_boundary_model(rng, killing=True)
        f = rng.normal(size=gb.n)
        dn = normal_derivative(gb, f)
        for k in range(gb.n):
            e = np.zeros(gb.n)
            e[k] = 1.0
            rhs = dn[k - gb.n_interior] * gb.mu[k - gb.n_interior] if k >= gb.n_interior else 0.0
            assert normal_derivative_pairing(gb, f, e) == pytest.approx(rhs, abs=1e-10)


# -- Robin --------------------------------------------------------------------------

def test_robin_pairing_and_symmetry(rng):
    for _ in range(30):
        gb = random_boundary_model(rng, killing=True)
        vals = rng.uniform(0, 10, gb.n_boundary)
        vals[rng.random(gb.n_boundary) < 0.3] = math.inf
        beta = RobinSpec(vals)
        assert robin_pairing_defect(gb, beta) <= 1e-10 * max(1.0, np.abs(robin_operator(gb, beta)).max())
        op = robin_operator(gb, beta) * gb.m[:, None]
        np.testing.assert_allclose(op, op.T, atol=1e-12)


def test_robin_penalty_limit():
    gb = three_vertex()
    big = robin_operator(gb, RobinSpec.constant(1e8, 2))
    assert big[0, 0] == pytest.approx(2.0, rel=1e-6)


def test_sandwich_examples(rng):
    gb = three_vertex()
    res = sandwich_check(gb, RobinSpec.constant(1.0, 2), [0.0, 1.0])
    assert res[0].lower_slack == 0.0 and res[0].upper_slack == 0.0
    op = robin_operator(gb, RobinSpec.constant(1.0, 2))
    assert semigroup(op, gb.m, 1.0)[0, 0] == pytest.approx(math.exp(-0.5))
    assert all(r.passed and r.in_theorem for r in res)
    for _ in range(30):
        gb = random_boundary_model(rng)
        res = sandwich_check(gb, RobinSpec(rng.uniform(0, 10, gb.n_boundary)), [0.1, 1.0, 10.0])
        assert all(r.passed for r in res)
    killed = random_boundary_model(np.random.default_rng(3), killing=True)
    if np.any(killed.c):
        assert not sandwich_check(killed, RobinSpec.constant(1.0, killed.n_boundary), [1.0])[0].in_theorem


# -- classification ------------------------------------------------------------------

def test_form_from_boundary_data(rng):
    gb = three_vertex()
    q = dtn_form(gb)
    np.testing.assert_allclose(form_from_boundary_data(gb, q).gram, neumann_form(gb).gram, atol=1e-12)
    for _ in range(30):
        gb = random_boundary_model(rng)
        beta = RobinSpec(rng.uniform(0, 5, gb.n_boundary))
        q = BoundaryForm(dtn_form(gb).q + np.diag(beta.beta * gb.mu))
        Q = form_from_boundary_data(gb, q)
        np.testing.assert_allclose(Q.gram, robin_form(gb, beta).gram, atol=1e-9)
        np.testing.assert_allclose(trace_form(gb, Q).q, q.q, atol=1e-9)
    gb = GraphWithBoundary.build(1, 2, [(0, 1, 1.0), (0, 2, 1.0)])
    F = frozenset({1})
    Q = form_from_boundary_data(gb, BoundaryForm(dtn_form(gb).q, F))
    assert Q.vanishing == F
    np.testing.assert_allclose(trace_form(gb, Q).restricted(), dtn_form(gb).q[:1, :1], atol=1e-9)


def test_form_from_boundary_data_injective_and_ordered():
    gb = three_vertex()
    q1 = BoundaryForm(dtn_form(gb).q + np.diag([1.0, 0.0]))
    q2 = BoundaryForm(dtn_form(gb).q + np.diag([0.0, 1.0]))
    assert not np.allclose(form_from_boundary_data(gb, q1).gram, form_from_boundary_data(gb, q2).gram)
    with pytest.raises(InputError, match="ordering violation"):
        form_from_boundary_data(gb, BoundaryForm(dtn_form(gb).q - np.eye(2)))


def test_extract_graph_examples(rng):
    path = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    g = extract_graph_from_form(form_matrix(path), path.m)
    np.testing.assert_array_equal(g.b.toarray(), path.b.toarray())
    np.testing.assert_array_equal(g.c, 0.0)
    g = extract_graph_from_form(np.diag([1.0, 2.0]), np.ones(2))
    assert g.b.nnz == 0 and list(g.c) == [1.0, 2.0]
    with pytest.raises(InputError, match="not a graph form"):
        extract_graph_from_form(np.array([[1.0, 0.1], [0.1, 1.0]]), np.ones(2))
    for _ in range(100):
        h = random_graph(rng, 30, killing=True)
        a = form_matrix(h).toarray()
        g = extract_graph_from_form(a, h.m)
        np.testing.assert_array_equal(g.b.toarray(), h.b.toarray())
        # c_Q is a rounded row sum, so the rebuilt diagonal can move by an ulp
        np.testing.assert_allclose(form_matrix(g).toarray(), a, rtol=0, atol=4 * np.spacing(np.abs(a).max()))
        np.testing.assert_allclose(g.c, h.c, rtol=0, atol=4 * np.spacing(np.abs(a).max()))


def test_kasue_constant(rng):
    gb = three_vertex()
    c0 = kasue_constant(gb, 0)
    mux = harmonic_measure(gb, 0)
    a = np.zeros((3, 3))
    a[1:, 1:] = np.diag(mux)
    assert c0 == pytest.approx(la.eigh(a, gb.q1_gram, eigvals_only=True)[-1], abs=1e-14)
    for _ in range(200):
        f = rng.normal(size=3)
        lhs = math.fsum(f[1:] ** 2 * mux)
        assert lhs <= c0 * gb.q1(f) * (1 + 1e-9)
        assert (lhs * 4) / (c0 * gb.q1(2 * f)) == pytest.approx(lhs / (c0 * gb.q1(f)))
    assert math.fsum(np.zeros(2) ** 2 * mux) == 0.0
    for _ in range(20):
        gb = random_boundary_model(rng, killing=True)
        x = int(rng.integers(gb.n_interior))
        c = kasue_constant(gb, x)
        mux = harmonic_measure(gb, x)
        for _ in range(20):
            f = rng.normal(size=gb.n)
            assert math.fsum(f[gb.dX] ** 2 * mux) <= c * gb.q1(f) * (1 + 1e-9)


def test_arendt_warma_data_trace():
    gb = three_vertex()
    tr = trace_form(gb, ({1}, np.array([0.0, 2.0])))
    assert tr.vanishing == frozenset({1}) and tr([1.0, 0.0]) == pytest.approx(2 / 3)
    with pytest.raises(InputError):
        arendt_warma_form(gb, set(), [-1.0, 0.0])
