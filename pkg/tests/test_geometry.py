import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from credalscm.constraints import LinearConstraintSystem
from credalscm.errors import DataError, DenominatorVanishes, Infeasible, VertexExplosion
from credalscm.geometry import (
    Polytope,
    dump_vertices_csv,
    independent_rows,
    linear_fractional_optimize,
    lp_optimize,
    phase_one,
    polytope,
    reduce_system,
    sample_point,
    vertex_enumeration,
)

from oracles import support_vertices_match
from oracles import vertices as naive_vertices

# K(U2) of the Markovian two-variable example
U2 = LinearConstraintSystem.from_rows(5, [
    ([0, 0, 1, 1, 1], 0.6),
    ([0, 0, 1, 0, 1], 0.4),
    ([1, 1, 0, 0, 0], 0.4),
    ([1, 1, 0, 1, 0], 0.6),
])
U2_VERTICES = [
    [0.0, 0.4, 0.4, 0.2, 0.0],
    [0.4, 0.0, 0.4, 0.2, 0.0],
    [0.0, 0.4, 0.0, 0.2, 0.4],
    [0.4, 0.0, 0.0, 0.2, 0.4],
]


def test_four_vertices_of_example_polytope():
    verts = vertex_enumeration(U2).vertices
    assert support_vertices_match(verts, U2_VERTICES)
    assert U2.contains(np.full(5, 0.2))


def test_single_variable_vertices():
    k = LinearConstraintSystem.from_rows(3, [([1, 0, 0], 1 / 3)])
    verts = vertex_enumeration(k).vertices
    assert support_vertices_match(verts, [[1 / 3, 0, 2 / 3], [1 / 3, 2 / 3, 0]])


def test_reduce_keeps_independent_rows():
    red = reduce_system(U2)
    assert red.eq_matrix.shape[0] == 3
    # same solution set: every vertex satisfies the reduced system and vice versa
    assert support_vertices_match(vertex_enumeration(red).vertices, U2_VERTICES)


def test_independent_rows_prefers_earlier_rows():
    a = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1, 0], [1, 1, 0]])
    assert independent_rows(a) == [0, 2]


def test_infeasible_system_detected():
    k = LinearConstraintSystem.from_rows(2, [([1, 0], 0.7), ([0, 1], 0.7)])
    violation, _ = phase_one(k)
    assert violation > 1e-3
    assert not polytope(k).feasible
    with pytest.raises(Infeasible):
        polytope(k).require_feasible()
    with pytest.raises(Infeasible):
        lp_optimize(k, [1, 0])


def test_singleton_and_unconstrained():
    s = LinearConstraintSystem.singleton([0.2, 0.3, 0.5])
    assert np.allclose(vertex_enumeration(s).vertices, [[0.2, 0.3, 0.5]])
    free = LinearConstraintSystem.unconstrained(3)
    assert np.allclose(sorted(map(tuple, vertex_enumeration(free).vertices)), np.eye(3)[::-1])


def test_inequalities_are_respected():
    k = LinearConstraintSystem.from_rows(3, [], [([1, 0, 0], "<=", 0.5), ([0, 1, 0], ">=", 0.25)])
    verts = vertex_enumeration(k).vertices
    for v in verts:
        assert v[0] <= 0.5 + 1e-12 and v[1] >= 0.25 - 1e-12
    assert lp_optimize(k, [1, 0, 0], "max")[0] == pytest.approx(0.5)
    assert lp_optimize(k, [0, 1, 0], "min")[0] == pytest.approx(0.25)


def test_vertex_cap():
    free = LinearConstraintSystem.unconstrained(6)
    with pytest.raises(VertexExplosion):
        Polytope(free, vertex_cap=3).vertices


def test_linear_fractional_matches_vertex_search():
    num, den = np.array([1.0, 0, 2, 0, 1]), np.array([1.0, 1, 1, 2, 1])
    best = max((num @ v) / (den @ v) for v in U2_VERTICES)
    worst = min((num @ v) / (den @ v) for v in U2_VERTICES)
    assert linear_fractional_optimize(U2, (num, 0), (den, 0), "max")[0] == pytest.approx(best)
    assert linear_fractional_optimize(U2, (num, 0), (den, 0), "min")[0] == pytest.approx(worst)


def test_linear_fractional_vanishing_denominator():
    with pytest.raises(DenominatorVanishes):
        linear_fractional_optimize(U2, ([1, 0, 0, 0, 0], 0), ([0, 0, 0, 0, 1], 0))


def test_sample_point_is_member_and_deterministic():
    p = sample_point(U2, 3)
    assert U2.contains(p)
    assert np.array_equal(p, sample_point(U2, 3))


def test_constraint_system_round_trip():
    k = U2.with_constraints([], [([1, 0, 0, 0, 0], "<=", 0.3)])
    back = LinearConstraintSystem.from_dict(k.to_dict())
    assert np.array_equal(back.eq_matrix, k.eq_matrix) and back.ineq_relations == ("<=",)
    with pytest.raises(DataError):
        LinearConstraintSystem.from_dict({"dimension": 2, "equalities": [{"coefficients": [1, 0]}]})


def test_dump_vertices(tmp_path):
    path = tmp_path / "v.csv"
    dump_vertices_csv(vertex_enumeration(U2), path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape == (4, 5)


@st.composite
def feasible_systems(draw):
    n = draw(st.integers(2, 6))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    p = rng.dirichlet(np.ones(n))
    m = draw(st.integers(0, n - 1))
    rows = (rng.random((m, n)) < 0.5).astype(float)
    return LinearConstraintSystem(n, rows, rows @ p), p


@settings(max_examples=60, deadline=None)
@given(feasible_systems())
def test_vertices_match_support_enumeration(case):
    system, p = case
    verts = vertex_enumeration(system).vertices
    oracle = naive_vertices(system.eq_matrix, system.eq_rhs, system.dimension)
    assert support_vertices_match(verts, oracle, tol=1e-7)
    for v in verts:
        assert system.residual(v) < 1e-8
    # the generating point is a convex combination of the vertices
    w = linprog(np.zeros(len(verts)), A_eq=np.vstack([verts.T, np.ones(len(verts))]),
                b_eq=np.concatenate([p, [1.0]]), bounds=(0, None), method="highs")
    assert w.status == 0


@settings(max_examples=40, deadline=None)
@given(feasible_systems(), st.integers(0, 1000))
def test_lp_optimum_attained_at_a_vertex(case, seed):
    system, _ = case
    c = np.random.default_rng(seed).normal(size=system.dimension)
    verts = vertex_enumeration(system).vertices
    assert lp_optimize(system, c, "max")[0] == pytest.approx(max(verts @ c), abs=1e-8)
    assert lp_optimize(system, c, "min")[0] == pytest.approx(min(verts @ c), abs=1e-8)
