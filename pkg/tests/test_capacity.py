import numpy as np
import pytest
from scipy.optimize import minimize

from graphforms import (Graph, InputError, capacity, energy, energy_capacity, generate,
                        recurrence_verdict, truncate)
from graphforms.capacity import (RecurrenceOptions, boundary_capacity_profile, escape_function,
                                 finite_measure, null_sequence)
from graphforms.energy import laplacian_vector
from graphforms.metrics import NotSummableError

from conftest import random_graph


def path3():
    return Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


def projected_oracle(g, U):
    """Bound-constrained minimization of Q(f) + |f|^2 with f >= 1 on U (inequality form)."""
    k = truncate(g, None).form.toarray() + np.diag(g.m)
    bounds = [(1.0, None) if x in U else (None, None) for x in range(g.n)]
    res = minimize(lambda f: (f @ k @ f, 2 * k @ f), np.ones(g.n) * 0.5, jac=True, method="L-BFGS-B",
                   bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000})
    return res.fun, res.x


def test_path_closed_form():
    res = capacity(path3(), [0])
    assert res.value == pytest.approx(8 / 5, abs=1e-10)
    np.testing.assert_allclose(res.potential, [1, 2 / 5, 1 / 5], atol=1e-12)
    val, f = projected_oracle(path3(), {0})
    assert val == pytest.approx(8 / 5, abs=1e-8)


def test_empty_and_full_sets():
    res = capacity(path3(), [])
    assert res.value == 0.0 and not res.potential.any()
    g = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], m=[1.0, 2.0, 0.5])
    full = capacity(g, [0, 1, 2])
    assert full.value == pytest.approx(3.5, rel=1e-14)
    np.testing.assert_array_equal(full.potential, 1.0)


def test_equality_constraint_matches_inequality_oracle(rng):
    for _ in range(15):
        g = random_graph(rng, 12, killing=True)
        U = set(rng.choice(g.n, size=int(rng.integers(1, g.n)), replace=False).tolist())
        res = capacity(g, U)
        val, f = projected_oracle(g, U)
        assert res.value == pytest.approx(val, rel=1e-7, abs=1e-9)
        np.testing.assert_allclose(res.potential, f, atol=1e-5)


def test_potential_invariants(rng):
    g = random_graph(rng, 30, killing=True)
    U = rng.choice(g.n, size=3, replace=False).tolist()
    res = capacity(g, U)
    f = res.potential
    assert f.min() >= 0 and f.max() <= 1 and np.all(f[U] == 1)
    resid = laplacian_vector(g, f) + f
    free = np.setdiff1d(np.arange(g.n), U)
    assert np.abs(resid[free]).max() <= 1e-9
    assert res.value == pytest.approx(energy(g, f) + np.sum(g.m * f * f), rel=1e-9)


def test_monotone_and_dominates_measure(rng):
    for _ in range(20):
        g = random_graph(rng, 20, killing=True)
        V = rng.choice(g.n, size=int(rng.integers(1, g.n + 1)), replace=False)
        U = V[: int(rng.integers(0, len(V) + 1))]
        cu, cv = capacity(g, U).value, capacity(g, V).value
        assert cu <= cv * (1 + 1e-12) + 1e-15
        assert g.m[U].sum() <= cu * (1 + 1e-12) + 1e-15
        assert cv <= g.m.sum() * (1 + 1e-12) + g.c.sum()


def test_energy_capacity_on_z():
    z = generate("lattice", {"d": 1})
    F, _ = z.ball(1)
    val, phi, model = energy_capacity(z, F, 10)
    assert val == pytest.approx(1 / 5, abs=1e-12)  # phi vanishes at the frontier +-11
    assert energy_capacity(z, F, 9)[0] == pytest.approx(2 / 9, abs=1e-12)
    assert np.all(phi[[model.index(v) for v in F]] == 1.0)


def test_energy_capacity_no_free_vertices():
    g = path3()
    val, phi, _ = energy_capacity(g, [0, 1, 2], [0, 1, 2])
    assert val == 0.0 and np.all(phi == 1.0)
    val, phi, _ = energy_capacity(g, [0, 1], [0, 1])
    assert val == pytest.approx(energy(g, [1.0, 1.0, 0.0]))


def test_energy_capacity_monotonicity():
    z2 = generate("lattice", {"d": 2})
    F1, _ = z2.ball(1)
    F2, _ = z2.ball(2)
    outer = [energy_capacity(z2, F1, r)[0] for r in (3, 5, 8)]
    assert outer[0] >= outer[1] >= outer[2]
    assert energy_capacity(z2, F1, 6)[0] <= energy_capacity(z2, F2, 6)[0]


def test_energy_capacity_rejects_killing_and_outside_sets():
    g = Graph.from_edges(2, [(0, 1, 1.0)], c=1.0)
    with pytest.raises(InputError):
        energy_capacity(g, [0], None)
    z = generate("lattice", {"d": 1})
    with pytest.raises(InputError):
        energy_capacity(z, [(5,)], 2)


def test_finite_measure_policies():
    m = finite_measure([0, 1, 1, 2], {0: 1, 1: 2, 2: 1}, "sphere_normalized")
    np.testing.assert_allclose(m, [1.0, 0.25, 0.25, 0.25])
    np.testing.assert_allclose(finite_measure([0, 1], None, "geometric"), [1.0, 0.5])
    with pytest.raises(InputError):
        finite_measure([0], None, "bogus")


def test_profile_decreases_on_z_with_geometric_measure():
    z = generate("lattice", {"d": 1})
    prof = boundary_capacity_profile(z, [1, 2, 4, 8, 16, 32], measure_policy="geometric")
    vals = prof.values
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.1


def test_profile_z3_stays_above_floor():
    z3 = generate("lattice", {"d": 3})
    prof = boundary_capacity_profile(z3, [1, 2, 4], outer_offsets=(4, 6, 8), measure_policy="geometric")
    assert min(prof.values) > 0.5


def test_profile_on_finite_graph():
    prof = boundary_capacity_profile(path3(), [1, 2, 4])
    assert prof.finite and prof.levels[-1].value == 0.0


def test_verdicts():
    assert recurrence_verdict(path3()).verdict == "Recurrent"
    killed = Graph.from_edges(2, [(0, 1, 1.0)], c=[0.5, 0.0])
    v = recurrence_verdict(killed)
    assert v.verdict == "Transient" and "killing" in v.reason
    with pytest.raises(InputError):
        recurrence_verdict(Graph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]))
    z = generate("lattice", {"d": 1})
    v = recurrence_verdict(z)
    assert v.verdict == "Recurrent" and v.heuristic and v.profile.levels[-1].value < 1e-3
    short = recurrence_verdict(z, RecurrenceOptions(inner_radii=(1, 2, 4, 8)))
    assert short.verdict == "Inconclusive"


def test_null_sequences_and_escape():
    z = generate("lattice", {"d": 1})
    terms = null_sequence(z, [(2 ** k, 4 ** (k + 1)) for k in range(1, 6)])
    energies = [t.energy for t in terms]
    assert all(b < a for a, b in zip(energies, energies[1:]))
    assert all(0 <= t.phi.min() and t.phi.max() <= 1 for t in terms)
    res = escape_function(z, terms)
    assert all(b > a for a, b in zip(res.plateau_minima, res.plateau_minima[1:]))
    finite = null_sequence(path3(), [(1, 4)])
    assert len(finite) == 1 and finite[0].energy == 0.0 and np.all(finite[0].phi == 1.0)
    z3 = generate("lattice", {"d": 3})
    far = null_sequence(z3, [(1, 4), (1, 8)])
    assert min(t.energy for t in far) > 1.0
    with pytest.raises(NotSummableError):
        escape_function(z3, far)
