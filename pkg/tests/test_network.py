import numpy as np
import pytest

from credalscm.constraints import LinearConstraintSystem
from credalscm.errors import InterveneExogenous, LikelihoodOutOfRange, MismatchedIdentification, NetworkError
from credalscm.identification import IdentificationResult, identify
from credalscm.models import backdoor_pscm, party_pscm
from credalscm.models import two_variable_markovian_pscm
from credalscm.network import (
    AUXILIARY,
    CredalNetwork,
    Node,
    attach_virtual_evidence,
    compile_network,
    intervene,
    precise_network,
    twin,
)
from credalscm.scm import induced_joint


def _compiled_markovian():
    pscm = two_variable_markovian_pscm()
    return compile_network(pscm.model, identify(pscm.model, induced_joint(pscm)))


def test_compile_structure():
    cn = _compiled_markovian()
    assert set(cn.credal_roots) == {"U1", "U2"}
    assert sorted(cn.edges()) == [("U1", "X1"), ("U2", "X2"), ("X1", "X2")]
    assert cn["X2"].degenerate
    assert cn.order.index("X1") < cn.order.index("X2")


def test_compile_rejects_mismatched_identification():
    pscm = two_variable_markovian_pscm()
    res = identify(pscm.model, induced_joint(pscm))
    partial = IdentificationResult({"U1": res["U1"]})
    with pytest.raises(MismatchedIdentification):
        compile_network(pscm.model, partial)


def test_surgery_removes_incoming_arcs():
    pscm = backdoor_pscm(1)
    cn = compile_network(pscm.model, identify(pscm.model, induced_joint(pscm)))
    cut = intervene(cn, {"X1": 0})
    assert ("U", "X1") not in cut.edges()
    assert ("U", "X2") in cut.edges() and ("X1", "X3") in cut.edges()
    assert np.array_equal(cut["X1"].cpt, [1.0, 0.0])
    assert ("U", "X1") in cn.edges()  # original untouched


def test_intervene_errors():
    cn = _compiled_markovian()
    with pytest.raises(InterveneExogenous):
        intervene(cn, {"U1": 0})
    with pytest.raises(NetworkError):
        intervene(cn, {"X1": 5})
    with pytest.raises(NetworkError):
        intervene(cn, {"Z": 0})


def test_twin_of_markovian_example():
    tw = twin(_compiled_markovian())
    endo = [v for v, n in tw.nodes.items() if n.kind == "endogenous"]
    exo = [v for v, n in tw.nodes.items() if n.kind == "exogenous"]
    assert sorted(endo) == ["X1", "X1'", "X2", "X2'"]
    assert sorted(exo) == ["U1", "U2"]
    assert sorted(tw.edges()) == sorted([
        ("U1", "X1"), ("U2", "X2"), ("X1", "X2"),
        ("U1", "X1'"), ("U2", "X2'"), ("X1'", "X2'"),
    ])
    assert tw["X2'"].cpt is tw["X2"].cpt


def test_twin_of_party_model_shares_exogenous_parents():
    pscm = party_pscm()
    cn = precise_network(pscm)
    tw = twin(cn)
    for k in range(1, 5):
        assert (f"U{k}", f"X{k}'") in tw.edges()
    assert ("X1'", "X2'") in tw.edges() and ("X3'", "X4'") in tw.edges()
    with pytest.raises(NetworkError):
        twin(tw)


def test_virtual_evidence_node():
    pscm = two_variable_markovian_pscm()
    cn = compile_network(pscm.model, identify(pscm.model, induced_joint(pscm)))
    z = attach_virtual_evidence(cn, "U1", [1.0, 0.5, 0.5])
    assert z["Z_U1"].kind == AUXILIARY
    assert np.allclose(z["Z_U1"].cpt, [[0, 1], [0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(LikelihoodOutOfRange):
        attach_virtual_evidence(cn, "U1", [1.2, 0, 0])
    with pytest.raises(LikelihoodOutOfRange):
        attach_virtual_evidence(cn, "U1", [1, 0])


def test_network_validation():
    with pytest.raises(NetworkError):
        CredalNetwork([Node("A", "endogenous", 2, ("B",), cpt=np.array([[1.0, 0], [0, 1]]))])
    with pytest.raises(NetworkError):
        CredalNetwork([Node("A", "exogenous", 2, cpt=np.array([0.7, 0.7]))])
    with pytest.raises(NetworkError):
        CredalNetwork([Node("A", "exogenous", 3, credal=LinearConstraintSystem.unconstrained(2))])


def test_network_round_trip():
    cn = _compiled_markovian()
    back = CredalNetwork.from_dict(cn.to_dict())
    assert back.edges() == cn.edges()
    assert np.array_equal(back["X2"].cpt, cn["X2"].cpt)
    assert np.array_equal(back["U2"].credal.eq_matrix, cn["U2"].credal.eq_matrix)


def test_with_pmfs_gives_precise_member():
    cn = _compiled_markovian()
    pscm = two_variable_markovian_pscm()
    member = cn.with_pmfs(pscm.exogenous_pmfs)
    assert member.precise
