"""Discrete structural causal models.

States are 0-based integers. A structural equation stores its function as an
integer array whose axes follow the declared parent order, so
``table[pa_0, ..., pa_k]`` is the child state.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CardinalityOverflow,
    CyclicGraph,
    DataError,
    EmptyDataset,
    ExogenousWithParents,
    ModelError,
    MultipleExogenousParents,
    NonPositiveCell,
    NonSurjectiveEquation,
)

log = logging.getLogger(__name__)

ENDOGENOUS = "endogenous"
EXOGENOUS = "exogenous"
MARKOVIAN = "markovian"
QUASI_MARKOVIAN = "quasi_markovian"

# Replica ids in twin networks are ``id + TWIN_SUFFIX``; user ids may not contain it.
TWIN_SUFFIX = "'"

PMF_TOL = 1e-9
DEFAULT_CARDINALITY_CAP = 1 << 20


@dataclass(frozen=True)
class Variable:
    id: str
    kind: str
    cardinality: int

    def __post_init__(self):
        if self.kind not in (ENDOGENOUS, EXOGENOUS):
            raise ModelError(f"variable {self.id!r}: unknown kind {self.kind!r}")
        if int(self.cardinality) < 1:
            raise ModelError(f"variable {self.id!r}: cardinality must be >= 1")
        if not self.id or TWIN_SUFFIX in self.id:
            raise ModelError(f"invalid variable id {self.id!r} (suffix {TWIN_SUFFIX!r} is reserved)")

    @property
    def endogenous(self) -> bool:
        return self.kind == ENDOGENOUS


class StructuralEquation:
    """Deterministic map from the parents' states to the child's state."""

    def __init__(self, child: str, parents: Sequence[str], table):
        self.child = child
        self.parents = tuple(parents)
        table = np.array(table, dtype=np.int64)
        if table.ndim != len(self.parents):
            raise ModelError(
                f"equation for {child!r}: table has {table.ndim} axes but {len(self.parents)} parents"
            )
        table.setflags(write=False)
        self.table = table

    def __call__(self, assignment: Mapping[str, int]) -> int:
        return int(self.table[tuple(assignment[p] for p in self.parents)])

    def __eq__(self, other):
        if not isinstance(other, StructuralEquation):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and np.array_equal(self.table, other.table)
        )

    def __repr__(self):
        return f"StructuralEquation({self.child!r}, parents={list(self.parents)})"


class CausalModel:
    """Variables plus one structural equation per endogenous variable.

    Construction only checks referential integrity (ids, table shapes, state
    ranges); class membership and acyclicity are checked by :func:`validate_model`.
    """

    def __init__(self, variables: Iterable[Variable], equations: Iterable[StructuralEquation]):
        self.variables: dict[str, Variable] = {}
        for v in variables:
            if v.id in self.variables:
                raise ModelError(f"duplicate variable id {v.id!r}")
            self.variables[v.id] = v
        self.equations: dict[str, StructuralEquation] = {}
        for eq in equations:
            if eq.child not in self.variables:
                raise ModelError(f"equation for unknown variable {eq.child!r}")
            if not self.variables[eq.child].endogenous:
                raise ModelError(f"equation given for exogenous variable {eq.child!r}")
            if eq.child in self.equations:
                raise ModelError(f"two equations for {eq.child!r}")
            for p in eq.parents:
                if p not in self.variables:
                    raise ModelError(f"equation for {eq.child!r}: unknown parent {p!r}")
            if len(set(eq.parents)) != len(eq.parents):
                raise ModelError(f"equation for {eq.child!r}: repeated parent")
            shape = tuple(self.card(p) for p in eq.parents)
            if eq.table.shape != shape:
                raise ModelError(
                    f"equation for {eq.child!r}: table shape {eq.table.shape} != parent cardinalities {shape}"
                )
            if eq.table.size and (eq.table.min() < 0 or eq.table.max() >= self.card(eq.child)):
                raise ModelError(f"equation for {eq.child!r}: child state out of range")
            self.equations[eq.child] = eq
        missing = [x for x in self.endogenous if x not in self.equations]
        if missing:
            raise ModelError(f"no structural equation for {missing}")
        self._index = {v: i for i, v in enumerate(self.variables)}

    # -- structure -------------------------------------------------------

    @property
    def endogenous(self) -> list[str]:
        return [v.id for v in self.variables.values() if v.endogenous]

    @property
    def exogenous(self) -> list[str]:
        return [v.id for v in self.variables.values() if not v.endogenous]

    def card(self, v: str) -> int:
        return self.variables[v].cardinality

    def index(self, v: str) -> int:
        return self._index[v]

    def parents(self, v: str) -> tuple[str, ...]:
        eq = self.equations.get(v)
        return eq.parents if eq is not None else ()

    def exogenous_parents(self, x: str) -> list[str]:
        return [p for p in self.parents(x) if not self.variables[p].endogenous]

    def exogenous_parent(self, x: str) -> str:
        ps = self.exogenous_parents(x)
        if len(ps) != 1:
            raise MultipleExogenousParents(f"{x!r} has {len(ps)} exogenous parents")
        return ps[0]

    def endogenous_parents(self, x: str) -> list[str]:
        return [p for p in self.parents(x) if self.variables[p].endogenous]

    def children(self, v: str) -> list[str]:
        return [x for x in self.endogenous if v in self.parents(x)]

    def edges(self) -> list[tuple[str, str]]:
        return [(p, x) for x in self.endogenous for p in self.parents(x)]

    def equation_cpt(self, x: str) -> np.ndarray:
        """Degenerate CPT of ``x``; axes are the parents (declared order) then ``x``."""
        eq = self.equations[x]
        cpt = np.zeros(eq.table.shape + (self.card(x),))
        np.put_along_axis(cpt, eq.table[..., None], 1.0, axis=-1)
        return cpt

    def __repr__(self):
        return f"CausalModel(endogenous={self.endogenous}, exogenous={self.exogenous})"


# -- validation and ordering ------------------------------------------------

def _topo_all(model: CausalModel) -> list[str]:
    """Kahn's algorithm; ties resolved by declaration index."""
    indeg = {v: len(model.parents(v)) for v in model.variables}
    kids: dict[str, list[str]] = {v: [] for v in model.variables}
    for p, c in model.edges():
        kids[p].append(c)
    ready = sorted((v for v, d in indeg.items() if d == 0), key=model.index)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for c in kids[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
        ready.sort(key=model.index)
    if len(order) != len(model.variables):
        cyc = [v for v, d in indeg.items() if d > 0]
        raise CyclicGraph(f"causal diagram has a directed cycle through {cyc}")
    return order


def topological_order(model: CausalModel) -> list[str]:
    """Endogenous ids, parents before children, ties by declaration order."""
    return [v for v in _topo_all(model) if model.variables[v].endogenous]


def nonsurjective_restrictions(model: CausalModel) -> list[tuple[str, tuple[int, ...]]]:
    """(variable, endogenous-parent configuration) pairs whose restricted SE misses a state."""
    flagged = []
    for x in model.endogenous:
        eq = model.equations[x]
        endo = [i for i, p in enumerate(eq.parents) if model.variables[p].endogenous]
        exo = [i for i in range(len(eq.parents)) if i not in endo]
        moved = np.moveaxis(eq.table, endo + exo, range(len(eq.parents)))
        shape = moved.shape[: len(endo)]
        for pa in itertools.product(*(range(n) for n in shape)):
            if len(np.unique(moved[pa])) < model.card(x):
                flagged.append((x, pa))
    return flagged


def validate_model(model: CausalModel) -> str:
    """Classify ``model`` as ``markovian`` or ``quasi_markovian``.

    Raises one of :class:`CyclicGraph`, :class:`ExogenousWithParents`,
    :class:`MultipleExogenousParents` or :class:`NonSurjectiveEquation` when
    the model is outside both classes.
    """
    _topo_all(model)
    for u in model.exogenous:
        if model.parents(u):
            raise ExogenousWithParents(f"exogenous variable {u!r} has parents")
    for x in model.endogenous:
        n = len(model.exogenous_parents(x))
        if n != 1:
            raise MultipleExogenousParents(f"{x!r} has {n} exogenous parents, expected 1")
        eq = model.equations[x]
        if len(np.unique(eq.table)) < model.card(x):
            raise NonSurjectiveEquation(f"structural equation of {x!r} is not surjective")
    for x, pa in nonsurjective_restrictions(model):
        log.debug("restriction of f_%s at endogenous parents %s is not surjective", x, pa)
    n_children = [len(model.children(u)) for u in model.exogenous]
    if any(n == 0 for n in n_children):
        orphan = [u for u, n in zip(model.exogenous, n_children) if n == 0]
        raise ModelError(f"exogenous variables without children: {orphan}")
    return MARKOVIAN if all(n == 1 for n in n_children) else QUASI_MARKOVIAN


# -- forward semantics --------------------------------------------------------

def _forward(model: CausalModel, u: Mapping[str, np.ndarray], order=None) -> dict[str, np.ndarray]:
    """Vectorised evaluation: each exogenous value may be an integer array."""
    values = {k: np.asarray(v) for k, v in u.items()}
    for x in order or topological_order(model):
        eq = model.equations[x]
        values[x] = eq.table[tuple(values[p] for p in eq.parents)]
    return values


def eval_equations(model: CausalModel, u: Mapping[str, int], order=None) -> dict[str, int]:
    """Endogenous states determined by the full exogenous assignment ``u``."""
    missing = [v for v in model.exogenous if v not in u]
    if missing:
        raise ModelError(f"exogenous assignment misses {missing}")
    values = _forward(model, u, order)
    return {x: int(values[x]) for x in model.endogenous}


def restricted_inverse(model: CausalModel, x: str, pa: Mapping[str, int], state: int) -> frozenset[int]:
    """Exogenous states ``u`` with ``f_x(u, pa) == state``."""
    eq = model.equations[x]
    u = model.exogenous_parent(x)
    endo = model.endogenous_parents(x)
    if set(pa) != set(endo):
        raise ModelError(f"restricted inverse of {x!r} needs exactly the endogenous parents {endo}")
    index = tuple(slice(None) if p == u else pa[p] for p in eq.parents)
    return frozenset(int(k) for k in np.flatnonzero(eq.table[index] == state))


def canonical_equation(
    child_cardinality: int,
    endogenous_parent_cardinalities: Sequence[int],
    child: str = "X",
    parents: Sequence[str] | None = None,
    exogenous: str = "U",
    cap: int = DEFAULT_CARDINALITY_CAP,
) -> tuple[int, StructuralEquation]:
    """Equation whose exogenous variable enumerates every deterministic map.

    Exogenous state ``k`` written in base ``child_cardinality`` (most significant
    digit first) lists the child state for each endogenous-parent configuration
    in row-major order. The returned equation has parents ``(*parents, exogenous)``.
    """
    if child_cardinality < 1 or any(c < 1 for c in endogenous_parent_cardinalities):
        raise ModelError("cardinalities must be >= 1")
    n_configs = math.prod(endogenous_parent_cardinalities)
    n_states = child_cardinality ** n_configs
    if n_states > cap:
        raise CardinalityOverflow(f"{child_cardinality}^{n_configs} = {n_states} exceeds cap {cap}")
    if parents is None:
        parents = [f"{child}_pa{i}" for i in range(len(endogenous_parent_cardinalities))]
    if len(parents) != len(endogenous_parent_cardinalities):
        raise ModelError("one name per endogenous parent required")
    k = np.arange(n_states)
    # digits[k, j]: child state of map k at configuration j
    powers = child_cardinality ** np.arange(n_configs - 1, -1, -1)
    digits = (k[:, None] // powers[None, :]) % child_cardinality
    table = digits.T.reshape(tuple(endogenous_parent_cardinalities) + (n_states,))
    return n_states, StructuralEquation(child, list(parents) + [exogenous], table)


def decode_canonical(index: int, child_cardinality: int, n_configs: int) -> tuple[int, ...]:
    """Function table (child state per parent configuration) of canonical index ``index``."""
    digits = []
    for _ in range(n_configs):
        index, d = divmod(index, child_cardinality)
        digits.append(d)
    return tuple(reversed(digits))


# -- probabilistic SCMs and distributions -------------------------------------

def _check_pmf(name: str, p: np.ndarray, size: int | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (size is not None and p.size != size):
        raise DataError(f"PMF of {name!r} must be a vector of length {size}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DataError(f"PMF of {name!r} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise DataError(f"PMF of {name!r} sums to {p.sum()!r}")
    return p


@dataclass(frozen=True, eq=False)
class ProbabilisticSCM:
    model: CausalModel
    exogenous_pmfs: Mapping[str, np.ndarray]

    def __post_init__(self):
        pmfs = {}
        for u in self.model.exogenous:
            if u not in self.exogenous_pmfs:
                raise DataError(f"no PMF for exogenous variable {u!r}")
            pmfs[u] = _check_pmf(u, self.exogenous_pmfs[u], self.model.card(u))
            pmfs[u].setflags(write=False)
        object.__setattr__(self, "exogenous_pmfs", pmfs)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Joint PMF over endogenous variables, flat and row-major in ``variable_order``.

    Zero cells are accepted here; strict positivity is enforced by the
    identification routines unless they are told otherwise.
    """

    variable_order: tuple[str, ...]
    cardinalities: tuple[int, ...]
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variable_order", tuple(self.variable_order))
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        if len(self.variable_order) != len(self.cardinalities):
            raise DataError("variable_order and cardinalities differ in length")
        if len(set(self.variable_order)) != len(self.variable_order):
            raise DataError("repeated variable in variable_order")
        p = _check_pmf("empirical", np.ravel(self.probabilities), math.prod(self.cardinalities))
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def table(self) -> np.ndarray:
        return self.probabilities.reshape(self.cardinalities)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.probabilities > 0))

    def marginal(self, variables: Sequence[str]) -> np.ndarray:
        """Marginal table with axes in the order of ``variables``."""
        axes = [self.variable_order.index(v) for v in variables]
        drop = tuple(i for i in range(len(self.variable_order)) if i not in axes)
        m = self.table.sum(axis=drop)
        kept = sorted(axes)
        return np.transpose(m, [kept.index(a) for a in axes])

    def prob(self, assignment: Mapping[str, int]) -> float:
        """Probability of a (partial) assignment."""
        names = list(assignment)
        return float(self.marginal(names)[tuple(assignment[v] for v in names)])

    def with_floor(self, floor: float) -> "EmpiricalDistribution":
        """Raise every cell to at least ``floor`` and renormalise."""
        if floor < 0:
            raise DataError("floor must be non-negative")
        p = np.maximum(self.probabilities, floor)
        return EmpiricalDistribution(self.variable_order, self.cardinalities, p / p.sum())


def induced_joint(pscm: ProbabilisticSCM, variable_order: Sequence[str] | None = None) -> EmpiricalDistribution:
    """Endogenous joint obtained by pushing the exogenous PMFs through the equations."""
    model = pscm.model
    order = tuple(variable_order or model.endogenous)
    exo = model.exogenous
    grids = np.meshgrid(*(np.arange(model.card(u)) for u in exo), indexing="ij")
    u = {name: g.ravel() for name, g in zip(exo, grids)}
    weight = np.ones(grids[0].size if exo else 1)
    for name in exo:
        weight = weight * pscm.exogenous_pmfs[name][u[name]]
    values = _forward(model, u)
    cards = tuple(model.card(x) for x in order)
    flat = np.ravel_multi_index(tuple(values[x] for x in order), cards)
    joint = np.bincount(flat, weights=weight, minlength=math.prod(cards))
    return EmpiricalDistribution(order, cards, joint / joint.sum())


def empirical_from_data(
    dataset: Sequence[Sequence[int]] | Sequence[Mapping[str, int]],
    variable_order: Sequence[str],
    cardinalities: Sequence[int],
    floor: float = 0.0,
) -> EmpiricalDistribution:
    """Relative frequencies of complete records.

    With ``floor == 0`` every configuration must occur at least once; otherwise
    cells are raised to ``floor`` and the vector renormalised.
    """
    if floor < 0:
        raise DataError("floor must be non-negative")
    if len(dataset) == 0:
        raise EmptyDataset("no records")
    order = tuple(variable_order)
    rows = [
        [rec[v] for v in order] if isinstance(rec, Mapping) else list(rec)
        for rec in dataset
    ]
    arr = np.asarray(rows, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != len(order):
        raise DataError("every record must assign all variables")
    cards = tuple(int(c) for c in cardinalities)
    if np.any(arr < 0) or np.any(arr >= np.asarray(cards)):
        raise DataError("record state out of range")
    counts = np.bincount(np.ravel_multi_index(arr.T, cards), minlength=math.prod(cards))
    freq = counts / counts.sum()
    if floor == 0:
        if np.any(freq == 0):
            raise NonPositiveCell(f"{int(np.sum(freq == 0))} configurations never observed")
        return EmpiricalDistribution(order, cards, freq)
    return EmpiricalDistribution(order, cards, freq).with_floor(floor)
