import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalscm.constraints import LinearConstraintSystem
from credalscm.errors import (
    InfeasibleIdentification,
    MismatchedIdentification,
    NonPositiveCell,
    NotMarkovian,
    NotQuasiMarkovian,
)
from credalscm.geometry import polytope, reduce_system, vertex_enumeration
from credalscm.identification import (
    IdentificationResult,
    add_constraints,
    identify,
    identify_markovian,
    identify_quasi_markovian,
    verify_identification,
)
from credalscm.models import (
    clinical_trial,
    party_model,
    party_pscm,
    random_pscm,
    single_variable,
    two_variable_confounded,
    two_variable_markovian,
    two_variable_markovian_pscm,
)
from credalscm.scm import CausalModel, EmpiricalDistribution, ProbabilisticSCM, StructuralEquation, Variable
from credalscm.scm import induced_joint

from oracles import constraint_rows, support_vertices_match

EX1_JOINT = EmpiricalDistribution(("X1", "X2"), (2, 2), [1 / 5, 2 / 15, 4 / 15, 6 / 15])


def _rows(system):
    return sorted((tuple(np.round(r, 9)), round(b, 9)) for r, b in system.equalities)


def test_single_variable_credal_set():
    model, emp = single_variable()
    k = identify_markovian(model, emp)["U"]
    assert support_vertices_match(vertex_enumeration(k).vertices, [[1 / 3, 0, 2 / 3], [1 / 3, 2 / 3, 0]])


def test_markovian_example_constraints():
    res = identify_markovian(two_variable_markovian(), EX1_JOINT)
    expected = [
        ([0, 0, 1, 1, 1], 0.6), ([0, 0, 1, 0, 1], 0.4), ([1, 1, 0, 0, 0], 0.4), ([1, 1, 0, 1, 0], 0.6),
    ]
    got = _rows(res["U2"])
    assert got == sorted((tuple(float(c) for c in r), b) for r, b in expected)
    # K(U1) equals the single-variable credal set
    assert _rows(res["U1"]) == [((0.0, 1.0, 1.0), round(2 / 3, 9)), ((1.0, 0.0, 0.0), round(1 / 3, 9))]


def test_confounded_example_constraint_set():
    res = identify_quasi_markovian(two_variable_confounded(), EX1_JOINT)
    red = reduce_system(res["U"])
    expected = [
        ((1.0, 0.0, 0.0, 0.0, 0.0), 1 / 5), ((0.0, 1.0, 0.0, 0.0, 0.0), 2 / 5),
        ((0.0, 0.0, 1.0, 0.0, 0.0), 4 / 15), ((0.0, 0.0, 0.0, 1.0, 1.0), 2 / 15),
    ]
    assert _rows(red) == sorted((r, round(b, 9)) for r, b in expected)


def test_clinical_trial_constraint_count():
    model, emp = clinical_trial()
    res = identify(model, emp)
    assert res.diagnostics["U"]["constraints"] == 8
    assert res.classification == "quasi_markovian"


def test_rows_match_direct_counting():
    model, emp = clinical_trial()
    res = identify(model, emp)
    oracle = constraint_rows(model, emp, "U")
    assert len(oracle) == len(res["U"].eq_rhs)
    for (row, rhs), (r2, b2) in zip(oracle, res["U"].equalities):
        assert np.array_equal(row, r2)
        assert rhs == pytest.approx(b2, abs=1e-12)


def test_wrong_algorithm_rejected():
    with pytest.raises(NotMarkovian):
        identify_markovian(two_variable_confounded(), EX1_JOINT)
    bad = CausalModel(
        [Variable("A", "endogenous", 2), Variable("U", "exogenous", 2), Variable("W", "exogenous", 2)],
        [StructuralEquation("A", ["U", "W"], [[0, 1], [1, 0]])],
    )
    with pytest.raises(NotQuasiMarkovian):
        identify_quasi_markovian(bad, EmpiricalDistribution(("A",), (2,), [0.5, 0.5]))


def test_zero_cells_strict_and_lenient():
    pscm = party_pscm()
    emp = induced_joint(pscm)
    assert not emp.strictly_positive
    with pytest.raises(NonPositiveCell):
        identify(pscm.model, emp)
    res = identify(pscm.model, emp, strict=False)
    for u in res:
        assert res[u].contains(pscm.exogenous_pmfs[u], tol=1e-9)


def test_inconsistent_empirical_is_infeasible():
    # X = U with a binary U cannot reproduce a joint where A and B disagree
    model = CausalModel(
        [Variable("A", "endogenous", 2), Variable("B", "endogenous", 2), Variable("U", "exogenous", 2)],
        [StructuralEquation("A", ["U"], [0, 1]), StructuralEquation("B", ["U"], [0, 1])],
    )
    emp = EmpiricalDistribution(("A", "B"), (2, 2), [0.25, 0.25, 0.25, 0.25])
    with pytest.raises(InfeasibleIdentification):
        identify(model, emp)


def test_missing_variable_in_empirical():
    with pytest.raises(MismatchedIdentification):
        identify(two_variable_markovian(), EmpiricalDistribution(("X1",), (2,), [0.5, 0.5]))


def test_expert_constraints_narrow_and_can_conflict():
    res = identify_markovian(two_variable_markovian(), EX1_JOINT)
    narrowed = add_constraints(res["U2"], [([1, 0, 0, 0, 0], "<=", 0.1)])
    assert len(vertex_enumeration(narrowed).vertices) == 4
    assert all(v[0] <= 0.1 + 1e-12 for v in vertex_enumeration(narrowed).vertices)
    with pytest.raises(InfeasibleIdentification):
        add_constraints(res["U2"], [([1, 1, 0, 0, 0], "=", 0.9)])


def test_identification_round_trip_dict():
    res = identify(two_variable_confounded(), EX1_JOINT)
    back = IdentificationResult.from_dict(res.to_dict())
    assert _rows(back["U"]) == _rows(res["U"])
    assert back.classification == res.classification


def test_verify_identification_report():
    pscm = two_variable_markovian_pscm()
    res = identify(pscm.model, EX1_JOINT)
    report = verify_identification(pscm.model, EX1_JOINT, res, samples=5, ground_truth=pscm.exogenous_pmfs)
    assert report["ok"] and report["ground_truth_member"]
    assert report["max_deviation"] < 1e-9


def test_party_joint_reproduced_by_members():
    pscm = party_pscm()
    emp = induced_joint(pscm)
    res = identify(party_model(), emp, strict=False)
    report = verify_identification(pscm.model, emp, res, samples=5, ground_truth=pscm.exogenous_pmfs)
    assert report["ok"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 4))
def test_generating_pmfs_satisfy_constraints(seed, n):
    pscm = random_pscm(seed, n)
    emp = induced_joint(pscm)
    res = identify(pscm.model, emp)
    for u in res:
        assert res[u].residual(pscm.exogenous_pmfs[u]) < 1e-9
        oracle = constraint_rows(pscm.model, emp, u)
        assert len(oracle) == len(res[u].eq_rhs)
        for (row, rhs), (r2, b2) in zip(oracle, res[u].equalities):
            assert np.array_equal(row, r2) and abs(rhs - b2) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 4))
def test_every_vertex_reproduces_the_joint(seed, n):
    pscm = random_pscm(seed, n)
    emp = induced_joint(pscm)
    res = identify(pscm.model, emp)
    rng = np.random.default_rng(seed)
    for u in res:
        for v in polytope(res[u]).vertices:
            pmfs = dict(pscm.exogenous_pmfs)
            for w in res:
                if w != u:
                    verts = polytope(res[w]).vertices
                    pmfs[w] = verts[rng.integers(len(verts))]
            pmfs[u] = v
            joint = induced_joint(ProbabilisticSCM(pscm.model, pmfs), emp.variable_order)
            assert np.max(np.abs(joint.probabilities - emp.probabilities)) < 1e-9


def test_singleton_system_pins_pmf():
    k = LinearConstraintSystem.singleton([0.1, 0.9])
    assert np.allclose(vertex_enumeration(k).vertices, [[0.1, 0.9]])
