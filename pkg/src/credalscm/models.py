"""Ready-made models: the small worked examples plus random generators.

States are 0-based throughout; state ``k`` here is the ``(k+1)``-th state in
one-based notation.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import ModelError
from .scm import (
    ENDOGENOUS,
    EXOGENOUS,
    CausalModel,
    EmpiricalDistribution,
    ProbabilisticSCM,
    StructuralEquation,
    Variable,
    canonical_equation,
)


def _endo(name: str, card: int = 2) -> Variable:
    return Variable(name, ENDOGENOUS, card)


def _exo(name: str, card: int) -> Variable:
    return Variable(name, EXOGENOUS, card)


# -- worked examples ------------------------------------------------------------

def two_variable_markovian() -> CausalModel:
    """X1 <- U1 (3 states), X2 <- (X1, U2) with U2 of 5 states."""
    return CausalModel(
        [_endo("X1"), _endo("X2"), _exo("U1", 3), _exo("U2", 5)],
        [
            StructuralEquation("X1", ["U1"], [0, 1, 1]),
            StructuralEquation("X2", ["X1", "U2"], [[1, 1, 0, 0, 0], [1, 1, 0, 1, 0]]),
        ],
    )


def two_variable_markovian_pscm() -> ProbabilisticSCM:
    """The Markovian model above with uniform exogenous PMFs."""
    return ProbabilisticSCM(two_variable_markovian(), {"U1": np.full(3, 1 / 3), "U2": np.full(5, 1 / 5)})


def single_variable() -> tuple[CausalModel, EmpiricalDistribution]:
    """Binary X driven by a ternary U, observed with P(X=0) = 1/3."""
    model = CausalModel([_endo("X"), _exo("U", 3)], [StructuralEquation("X", ["U"], [0, 1, 1])])
    return model, EmpiricalDistribution(("X",), (2,), [1 / 3, 2 / 3])


def two_variable_confounded() -> CausalModel:
    """X1 -> X2 with one 5-state exogenous parent shared by both."""
    return CausalModel(
        [_endo("X1"), _endo("X2"), _exo("U", 5)],
        [
            StructuralEquation("X1", ["U"], [0, 1, 1, 0, 0]),
            StructuralEquation("X2", ["X1", "U"], [[0, 1, 0, 1, 1], [1, 1, 0, 1, 1]]),
        ],
    )


def backdoor_pscm(seed=None, exo_cardinality: int = 4, max_tries: int = 1000) -> ProbabilisticSCM:
    """Random quantification of U -> {X1, X2}, U3 -> X3, X1 -> X3 <- X2.

    The confounder tables are redrawn until every (x1, x2) pair is reachable,
    so the induced joint is strictly positive.
    """
    rng = np.random.default_rng(seed)
    variables = [_endo("X1"), _endo("X2"), _endo("X3"), _exo("U", exo_cardinality), _exo("U3", 16)]
    for _ in range(max_tries):
        t1 = rng.integers(0, 2, exo_cardinality)
        t2 = rng.integers(0, 2, exo_cardinality)
        if len(set(zip(t1.tolist(), t2.tolist()))) == 4:
            break
    else:  # pragma: no cover - probability of failure is negligible
        raise ModelError("could not draw a positive confounder table")
    _, eq3 = canonical_equation(2, [2, 2], child="X3", parents=["X1", "X2"], exogenous="U3")
    model = CausalModel(
        variables,
        [StructuralEquation("X1", ["U"], t1), StructuralEquation("X2", ["U"], t2), eq3],
    )
    pmfs = {"U": rng.dirichlet(np.ones(exo_cardinality)), "U3": rng.dirichlet(np.ones(16))}
    return ProbabilisticSCM(model, pmfs)


def backdoor_adjustment(empirical: EmpiricalDistribution, x1: int, x3: int) -> float:
    """``sum_x2 P(x3 | x1, x2) P(x2)`` from the observed joint."""
    joint = empirical.marginal(["X1", "X2", "X3"])
    p_x2 = joint.sum(axis=(0, 2))
    cond = joint[x1, :, x3] / joint[x1].sum(axis=-1)
    return float(cond @ p_x2)


def clinical_trial() -> tuple[CausalModel, EmpiricalDistribution]:
    """Assignment X1 -> treatment X2 -> outcome X3 with a 16-state confounder of X2 and X3.

    ``U = 4 r2 + r3`` where ``r2`` and ``r3`` index the four response functions
    of X2 (to X1) and X3 (to X2): 0 constant 0, 1 identity, 2 negation, 3 constant 1.
    """
    resp = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    u = np.arange(16)
    x2_table = resp[u // 4].T  # [x1, u]
    x3_table = resp[u % 4].T  # [x2, u]
    model = CausalModel(
        [_endo("X1"), _endo("X2"), _endo("X3"), _exo("U1", 2), _exo("U", 16)],
        [
            StructuralEquation("X1", ["U1"], [0, 1]),
            StructuralEquation("X2", ["X1", "U"], x2_table),
            StructuralEquation("X3", ["X2", "U"], x3_table),
        ],
    )
    p_x1 = np.array([0.9, 0.1])
    # conditional tables of (X2, X3) given X1, each listed with X3 as the major index
    cond = np.array([[0.32, 0.32, 0.04, 0.32], [0.02, 0.17, 0.67, 0.14]]).reshape(2, 2, 2)
    joint = (p_x1[:, None, None] * cond.transpose(0, 2, 1)).ravel()
    return model, EmpiricalDistribution(("X1", "X2", "X3"), (2, 2, 2), joint)


# -- party model ---------------------------------------------------------------------
#
# X1 -> X2, X1 -> X3, (X2, X3) -> X4 with exogenous cardinalities 2, 4, 4, 3.
# X2 and X3 use the four response functions of a binary parent; X4 behaves as
# OR, AND or XOR of (X2, X3) depending on U4.

PARTY_PMFS = {
    "U1": [0.4, 0.6],
    "U2": [0.1, 0.6, 0.1, 0.2],
    "U3": [0.2, 0.5, 0.1, 0.2],
    "U4": [0.5, 0.3, 0.2],
}


def party_model(canonical_x4: bool = False) -> CausalModel:
    """The four-variable party model; ``canonical_x4`` replaces X4's equation by the 16-map enumeration."""
    _, eq2 = canonical_equation(2, [2], child="X2", parents=["X1"], exogenous="U2")
    _, eq3 = canonical_equation(2, [2], child="X3", parents=["X1"], exogenous="U3")
    if canonical_x4:
        n4, eq4 = canonical_equation(2, [2, 2], child="X4", parents=["X2", "X3"], exogenous="U4")
    else:
        a, b = np.meshgrid([0, 1], [0, 1], indexing="ij")
        n4 = 3
        eq4 = StructuralEquation("X4", ["X2", "X3", "U4"], np.stack([a | b, a & b, a ^ b], axis=-1))
    return CausalModel(
        [_endo("X1"), _endo("X2"), _endo("X3"), _endo("X4"),
         _exo("U1", 2), _exo("U2", 4), _exo("U3", 4), _exo("U4", n4)],
        [StructuralEquation("X1", ["U1"], [0, 1]), eq2, eq3, eq4],
    )


def party_pscm(u4: Sequence[float] | None = None) -> ProbabilisticSCM:
    pmfs = dict(PARTY_PMFS)
    if u4 is not None:
        pmfs["U4"] = list(u4)
    return ProbabilisticSCM(party_model(), {k: np.asarray(v, dtype=float) for k, v in pmfs.items()})


# -- random models ---------------------------------------------------------------------

def _scope(model: CausalModel, children: Sequence[str]) -> list[str]:
    scope = list(children)
    for x in children:
        scope += [p for p in model.endogenous_parents(x) if p not in scope]
    return scope


def support_complete(model: CausalModel, u: str) -> bool:
    """Whether every assignment of ``u``'s children and their parents is reachable from some state of ``u``.

    With full-support exogenous PMFs the induced joint is strictly positive
    exactly when this holds for every exogenous variable.
    """
    children = model.children(u)
    scope = _scope(model, children)
    pos = {v: i for i, v in enumerate(scope)}
    tables = []
    for x in children:
        eq = model.equations[x]
        endo = [p for p in eq.parents if p != u]
        axes = [eq.parents.index(p) for p in endo] + [eq.parents.index(u)]
        tables.append((x, endo, np.transpose(eq.table, axes)))
    for assign in itertools.product(*(range(model.card(v)) for v in scope)):
        mask = np.ones(model.card(u), dtype=bool)
        for x, endo, table in tables:
            mask &= table[tuple(assign[pos[p]] for p in endo)] == assign[pos[x]]
        if not mask.any():
            return False
    return True


def random_table(rng: np.random.Generator, child_card: int, shape: Sequence[int]) -> np.ndarray:
    """Uniform random table over ``shape`` using every child state at least once."""
    size = int(np.prod(shape))
    if size < child_card:
        raise ModelError(f"{size} parent configurations cannot cover {child_card} states")
    while True:
        t = rng.integers(0, child_card, size)
        if np.unique(t).size == child_card:
            return t.reshape(tuple(shape))


def random_pscm(seed=None, n_endogenous: int = 3, max_exo_cardinality: int = 6,
                confounded: bool = True, max_parents: int = 2, max_tries: int = 200) -> ProbabilisticSCM:
    """Random (quasi-)Markovian PSCM over binary endogenous variables with a strictly positive joint.

    With ``confounded`` some exogenous variables get two children. Exogenous
    cardinalities are at most ``max_exo_cardinality``; structures whose tables
    cannot reach every configuration within ``max_tries`` draws are redrawn.
    """
    rng = np.random.default_rng(seed)
    names = [f"X{i + 1}" for i in range(n_endogenous)]
    while True:
        parents = {}
        for i, x in enumerate(names):
            k = int(rng.integers(0, min(i, max_parents) + 1))
            parents[x] = sorted(rng.choice(i, size=k, replace=False).tolist()) if k else []
            parents[x] = [names[j] for j in parents[x]]
        groups = []
        pool = list(names)
        rng.shuffle(pool)
        while pool:
            size = 2 if confounded and len(pool) > 1 and rng.random() < 0.5 else 1
            groups.append(sorted(pool[:size], key=names.index))
            pool = pool[size:]
        model = _fill_groups(rng, names, parents, groups, max_exo_cardinality, max_tries)
        if model is not None:
            break
    pmfs = {u: rng.dirichlet(np.ones(model.card(u))) for u in model.exogenous}
    return ProbabilisticSCM(model, pmfs)


def _fill_groups(rng, names, parents, groups, max_card, max_tries) -> CausalModel | None:
    variables = [_endo(x) for x in names]
    equations = []
    for g, children in enumerate(groups):
        u = f"U{g + 1}"
        # smallest cardinality able to reach every configuration of the children
        free = 2 ** len(children)
        card = int(rng.integers(max(free, 2), max_card + 1)) if free <= max_card else None
        if card is None:
            return None
        for _ in range(max_tries):
            eqs = [
                StructuralEquation(x, parents[x] + [u],
                                   random_table(rng, 2, [2] * len(parents[x]) + [card]))
                for x in children
            ]
            trial = CausalModel(
                [_endo(x) for x in names if x in children or any(x in parents[c] for c in children)]
                + [_exo(u, card)],
                eqs + [StructuralEquation(p, [], 0) for p in _outside_parents(children, parents)],
            )
            if support_complete(trial, u):
                break
        else:
            return None
        variables.append(_exo(u, card))
        equations.extend(eqs)
    return CausalModel(variables, equations)


def _outside_parents(children, parents) -> list[str]:
    out = []
    for c in children:
        out += [p for p in parents[c] if p not in children and p not in out]
    return out


__all__ = [
    "PARTY_PMFS", "backdoor_adjustment", "backdoor_pscm", "clinical_trial", "party_model",
    "party_pscm", "random_pscm", "random_table", "single_variable", "support_complete",
    "two_variable_confounded", "two_variable_markovian",
    "two_variable_markovian_pscm",
]
