import math

import numpy as np
import pytest

from credalscm.bench import (
    BenchConfig,
    BenchRecord,
    check_length,
    generate_model,
    iteration_seeds,
    query_for,
    read_records,
    role,
    run_benchmark,
    structure,
    summarize,
    write_records,
)
from credalscm.errors import EmptyRecords
from credalscm.models import support_complete
from credalscm.scm import induced_joint, validate_model


def test_tree_structure():
    parents, groups = structure("tree", 4)
    assert parents == {"X1": [], "X2": ["X1"], "X3": ["X2"], "X4": ["X3"]}
    assert groups == [["X1", "X2"], ["X3", "X4"]]


def test_polytree_and_multiply_connected_structure():
    parents, groups = structure("polytree", 4)
    assert parents == {"X1": ["X2"], "X2": [], "X3": ["X1", "X4"], "X4": []}
    assert groups == [["X1", "X3"], ["X2"], ["X4"]]
    parents, groups = structure("multiply_connected", 4)
    assert parents == {"X1": [], "X2": ["X1"], "X3": ["X1"], "X4": ["X2", "X3"]}
    assert groups == [["X1", "X3"], ["X2", "X4"]]


@pytest.mark.parametrize("topology,length", [("tree", 2), ("polytree", 6), ("multiply_connected", 5),
                                             ("multiply_connected", 2), ("ring", 4)])
def test_bad_lengths(topology, length):
    with pytest.raises(ValueError):
        check_length(topology, length)


def test_roles_distinguish_shapes():
    parents, groups = structure("tree", 6)
    assert role(groups[0], parents) == role(groups[2], parents) or groups[0] == ["X1", "X2"]
    assert role(["X1", "X2"], parents) == ((), (0,))
    assert role(["X3", "X4"], parents) == ((-1,), (0,))


def test_queries():
    q = query_for("tree", 10)
    assert (q.target, q.interventions, q.evidence) == ("X5", {"X1": 0}, {"X10": 0})
    assert query_for("tree", 3).target == "X2"
    assert query_for("polytree", 8).evidence == {"X7": 0}


@pytest.mark.parametrize("topology,length", [("tree", 6), ("polytree", 8), ("multiply_connected", 6)])
def test_generated_models_are_valid_and_positive(topology, length):
    config = BenchConfig(topology, length, iterations=3)
    for s in iteration_seeds(0, 3):
        pscm = generate_model(config, s)
        assert validate_model(pscm.model) in ("markovian", "quasi_markovian")
        assert all(support_complete(pscm.model, u) for u in pscm.model.exogenous)
        assert induced_joint(pscm).strictly_positive


def test_stationary_templates():
    config = BenchConfig("tree", 8, iterations=1)
    pscm = generate_model(config, iteration_seeds(3, 1)[0])
    eq = pscm.model.equations
    assert np.array_equal(eq["X3"].table, eq["X5"].table)
    assert np.array_equal(eq["X4"].table, eq["X8"].table)


def test_runs_are_deterministic_and_sized():
    config = BenchConfig("tree", 4, iterations=3, seed=11)
    a, b = run_benchmark(config), run_benchmark(config, workers=2)
    assert len(a) == 6
    assert [(r.iteration, r.method, r.lower, r.upper) for r in a] == \
        [(r.iteration, r.method, r.lower, r.upper) for r in b]


def test_summary_and_round_trip(tmp_path):
    records = run_benchmark(BenchConfig("tree", 6, iterations=4, seed=2))
    rows = summarize(records)
    by_method = {r["method"]: r for r in rows}
    assert by_method["exact"]["completed"] == 4
    assert by_method["approx"]["rmse"] < 0.02
    assert by_method["approx"]["containment_violations"] == 0
    path = tmp_path / "records.csv"
    write_records(records, path)
    back = read_records(path)
    assert [(r.lower, r.upper) for r in back] == [(r.lower, r.upper) for r in records]


def test_summary_rmse_by_hand():
    mk = lambda m, lo, hi: BenchRecord("tree", 4, 0, m, 0.1, hi - lo, lo, hi, False)
    rows = summarize([mk("exact", 0.2, 0.6), mk("approx", 0.3, 0.5)])
    approx = [r for r in rows if r["method"] == "approx"][0]
    assert approx["rmse"] == pytest.approx(0.1)
    assert approx["containment_violations"] == 0
    rows = summarize([mk("exact", 0.2, 0.6), mk("approx", 0.1, 0.5)])
    assert [r for r in rows if r["method"] == "approx"][0]["containment_violations"] == 1
    with pytest.raises(EmptyRecords):
        summarize([])


def test_timeouts_are_recorded():
    timed = BenchRecord("tree", 4, 0, "exact", 1.0, math.nan, math.nan, math.nan, True)
    rows = summarize([timed])
    assert rows[0]["timeout_rate"] == 1.0 and rows[0]["completed"] == 0
