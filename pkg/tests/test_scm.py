import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalscm.errors import (
    CardinalityOverflow,
    CyclicGraph,
    DataError,
    EmptyDataset,
    ModelError,
    MultipleExogenousParents,
    NonPositiveCell,
    NonSurjectiveEquation,
)
from credalscm.models import party_model, random_pscm, two_variable_confounded, two_variable_markovian
from credalscm.models import two_variable_markovian_pscm
from credalscm.scm import (
    MARKOVIAN,
    QUASI_MARKOVIAN,
    CausalModel,
    EmpiricalDistribution,
    ProbabilisticSCM,
    StructuralEquation,
    Variable,
    canonical_equation,
    decode_canonical,
    empirical_from_data,
    eval_equations,
    induced_joint,
    nonsurjective_restrictions,
    restricted_inverse,
    topological_order,
    validate_model,
)

from oracles import joint as brute_joint


def V(name, kind="endogenous", card=2):
    return Variable(name, kind, card)


def test_markovian_example_joint_values():
    joint = induced_joint(two_variable_markovian_pscm(), ["X1", "X2"])
    assert np.allclose(joint.table, [[1 / 5, 2 / 15], [4 / 15, 6 / 15]], atol=1e-12)


def test_classification_of_examples():
    assert validate_model(two_variable_markovian()) == MARKOVIAN
    assert validate_model(two_variable_confounded()) == QUASI_MARKOVIAN


def test_equation_cpt_is_degenerate_and_matches_table():
    m = two_variable_markovian()
    cpt = m.equation_cpt("X1")
    assert cpt.shape == (3, 2)
    assert np.array_equal(cpt, [[1, 0], [0, 1], [0, 1]])
    cpt2 = m.equation_cpt("X2")
    assert np.array_equal(cpt2[0, :, 0], [0, 0, 1, 1, 1])
    assert np.array_equal(cpt2[1, :, 0], [0, 0, 1, 0, 1])


def test_restricted_inverse_examples():
    m = two_variable_markovian()
    assert restricted_inverse(m, "X1", {}, 1) == {1, 2}
    assert restricted_inverse(m, "X2", {"X1": 0}, 0) == {2, 3, 4}
    assert restricted_inverse(m, "X2", {"X1": 1}, 0) == {2, 4}


def test_restricted_inverse_partitions_exogenous_states():
    m = two_variable_markovian()
    for x1 in range(2):
        parts = [restricted_inverse(m, "X2", {"X1": x1}, s) for s in range(2)]
        assert parts[0] | parts[1] == set(range(5))
        assert not parts[0] & parts[1]


def test_cycle_detected():
    m = CausalModel(
        [V("A"), V("B"), V("U", "exogenous", 2), V("W", "exogenous", 2)],
        [StructuralEquation("A", ["B", "U"], [[0, 1], [1, 0]]),
         StructuralEquation("B", ["A", "W"], [[0, 1], [1, 0]])],
    )
    with pytest.raises(CyclicGraph):
        validate_model(m)


def test_multiple_exogenous_parents_rejected():
    m = CausalModel(
        [V("A"), V("U", "exogenous", 2), V("W", "exogenous", 2)],
        [StructuralEquation("A", ["U", "W"], [[0, 1], [1, 0]])],
    )
    with pytest.raises(MultipleExogenousParents):
        validate_model(m)


def test_endogenous_without_exogenous_parent_rejected():
    m = CausalModel([V("A"), V("B"), V("U", "exogenous", 2)],
                    [StructuralEquation("A", ["U"], [0, 1]), StructuralEquation("B", ["A"], [1, 0])])
    with pytest.raises(MultipleExogenousParents):
        validate_model(m)


def test_non_surjective_equation_rejected():
    m = CausalModel([V("A"), V("U", "exogenous", 3)], [StructuralEquation("A", ["U"], [0, 0, 0])])
    with pytest.raises(NonSurjectiveEquation):
        validate_model(m)


def test_reserved_suffix_and_bad_kinds():
    with pytest.raises(ModelError):
        V("A'")
    with pytest.raises(ModelError):
        V("A", "latent")
    with pytest.raises(ModelError):
        CausalModel([V("A"), V("U", "exogenous", 2)], [StructuralEquation("A", ["U"], [0, 2])])
    with pytest.raises(ModelError):
        CausalModel([V("A"), V("U", "exogenous", 2)], [StructuralEquation("U", ["A"], [0, 1])])


def test_orphan_exogenous_rejected():
    m = CausalModel([V("A"), V("U", "exogenous", 2), V("W", "exogenous", 2)],
                    [StructuralEquation("A", ["U"], [0, 1])])
    with pytest.raises(ModelError):
        validate_model(m)


def test_topological_order_ties_by_declaration():
    m = party_model()
    assert topological_order(m) == ["X1", "X2", "X3", "X4"]
    # brute force: the returned order is a valid topological sort
    order = topological_order(m)
    for x in order:
        for p in m.endogenous_parents(x):
            assert order.index(p) < order.index(x)


def test_eval_equations_example():
    m = two_variable_markovian()
    assert eval_equations(m, {"U1": 0, "U2": 3}) == {"X1": 0, "X2": 0}
    assert eval_equations(m, {"U1": 2, "U2": 3})["X2"] == 1


@pytest.mark.parametrize("card,parents", [(2, [2]), (2, [2, 2]), (3, [2])])
def test_canonical_equation_enumerates_every_map(card, parents):
    n, eq = canonical_equation(card, parents)
    configs = list(itertools.product(*(range(c) for c in parents)))
    assert n == card ** len(configs)
    maps = {tuple(int(eq.table[cfg + (k,)]) for cfg in configs) for k in range(n)}
    assert len(maps) == n
    for k in range(n):
        assert decode_canonical(k, card, len(configs)) == tuple(int(eq.table[cfg + (k,)]) for cfg in configs)


def test_canonical_binary_single_parent_order():
    _, eq = canonical_equation(2, [2])
    # constant 0, identity, negation, constant 1
    assert eq.table.T.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_canonical_cap():
    with pytest.raises(CardinalityOverflow):
        canonical_equation(2, [2] * 5, cap=1000)


def test_empirical_distribution_checks():
    with pytest.raises(DataError):
        EmpiricalDistribution(("A",), (2,), [0.5, 0.6])
    with pytest.raises(DataError):
        EmpiricalDistribution(("A",), (2,), [-0.1, 1.1])
    e = EmpiricalDistribution(("A", "B"), (2, 3), np.arange(6) / 15)
    assert np.allclose(e.marginal(["B", "A"]), e.table.T)
    assert math.isclose(e.prob({"B": 2}), (2 + 5) / 15)


def test_empirical_from_data():
    data = [[0, 0], [0, 1], [1, 0], [1, 1], [1, 1]]
    e = empirical_from_data(data, ["A", "B"], [2, 2])
    assert np.allclose(e.probabilities, [0.2, 0.2, 0.2, 0.4])
    with pytest.raises(EmptyDataset):
        empirical_from_data([], ["A"], [2])
    with pytest.raises(NonPositiveCell):
        empirical_from_data([[0, 0]], ["A", "B"], [2, 2])
    floored = empirical_from_data([[0, 0]], ["A", "B"], [2, 2], floor=0.01)
    assert floored.strictly_positive


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_induced_joint_matches_enumeration(seed, n):
    pscm = random_pscm(seed, n)
    order = pscm.model.endogenous
    fast = induced_joint(pscm, order)
    slow = brute_joint(pscm.model, pscm.exogenous_pmfs, order)
    for key, p in slow.items():
        assert abs(fast.table[key] - p) < 1e-12
    assert abs(fast.probabilities.sum() - 1) < 1e-12


def test_pscm_requires_valid_pmfs():
    m = two_variable_markovian()
    with pytest.raises(DataError):
        ProbabilisticSCM(m, {"U1": [1, 0, 0]})
    with pytest.raises(DataError):
        ProbabilisticSCM(m, {"U1": [1, 0, 0], "U2": [0.5, 0.5, 0, 0, 0.1]})


def test_nonsurjective_restrictions_reported():
    m = two_variable_markovian()
    assert nonsurjective_restrictions(m) == []
    m2 = CausalModel([V("A"), V("B"), V("U", "exogenous", 2), V("W", "exogenous", 2)],
                     [StructuralEquation("A", ["U"], [0, 1]),
                      StructuralEquation("B", ["A", "W"], [[0, 0], [0, 1]])])
    assert nonsurjective_restrictions(m2) == [("B", (0,))]
