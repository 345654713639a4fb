"""Queries on credal networks.

Exact bounds enumerate the vertex combinations of the credal roots. Rather than
running one elimination per combination, each credal root gets a selector
variable indexing its vertices; the selectors are kept during elimination, so a
single pass returns the query for every combination at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DenominatorVanishes,
    NetworkError,
    VertexExplosion,
    ZeroEvidenceEverywhere,
    ZeroEvidenceProbability,
)
from .geometry import MAX, MIN, linear_fractional_optimize
from .network import CredalNetwork, intervene, precise_network, primed, twin
from .scm import ProbabilisticSCM

EXACT, APPROX = "exact", "approx"
POINT_TOL = 1e-6
EVIDENCE_TOL = 1e-12
DEFAULT_COMBINATION_CAP = 2_000_000
_SELECTOR = "#"


# -- factors -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Factor:
    scope: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        if self.table.ndim != len(self.scope):
            raise ValueError(f"table has {self.table.ndim} axes for scope {self.scope}")

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        hit = [v for v in self.scope if v in evidence]
        if not hit:
            return self
        index = tuple(evidence[v] if v in evidence else slice(None) for v in self.scope)
        return Factor(tuple(v for v in self.scope if v not in evidence), self.table[index])

    def sum_out(self, v: str) -> "Factor":
        i = self.scope.index(v)
        return Factor(self.scope[:i] + self.scope[i + 1:], self.table.sum(axis=i))

    def transpose(self, scope: Sequence[str]) -> "Factor":
        return Factor(tuple(scope), np.transpose(self.table, [self.scope.index(v) for v in scope]))


def multiply(factors: Sequence[Factor], sum_out: Iterable[str] = ()) -> Factor:
    """Product of factors, optionally summing out some variables in the same contraction."""
    drop = set(sum_out)
    names: dict[str, int] = {}
    operands = []
    for f in factors:
        operands.append(f.table)
        operands.append([names.setdefault(v, len(names)) for v in f.scope])
    out = [v for v in names if v not in drop]
    operands.append([names[v] for v in out])
    return Factor(tuple(out), np.einsum(*operands, optimize=len(factors) > 2))


def eliminate(factors: list[Factor], keep: Sequence[str], rank: Mapping[str, int]) -> Factor:
    """Sum-product elimination of every variable not in ``keep``.

    Order: minimum degree in the interaction graph, ties by ``rank``.
    """
    factors = list(factors)
    keep_set = set(keep)
    while True:
        variables = {v for f in factors for v in f.scope if v not in keep_set}
        if not variables:
            break
        neighbours: dict[str, set[str]] = {v: set() for v in variables}
        for f in factors:
            for v in f.scope:
                if v in neighbours:
                    neighbours[v].update(f.scope)
        v = min(variables, key=lambda w: (len(neighbours[w]) - 1, rank.get(w, math.inf), w))
        touching = [f for f in factors if v in f.scope]
        factors = [f for f in factors if v not in f.scope]
        factors.append(multiply(touching, [v]))
    result = multiply(factors) if factors else Factor((), np.array(1.0))
    missing = [v for v in keep if v not in result.scope]
    if missing:
        raise NetworkError(f"variables {missing} do not appear in any factor")
    return result.transpose(keep)


# -- queries and results -----------------------------------------------------------

@dataclass(frozen=True)
class CausalQuery:
    """``P(target = target_state | do(interventions), evidence)``."""

    target: str
    target_state: int = 0
    interventions: Mapping[str, int] = field(default_factory=dict)
    evidence: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "interventions", dict(self.interventions))
        object.__setattr__(self, "evidence", dict(self.evidence))
        both = set(self.interventions) & set(self.evidence)
        if both:
            raise ValueError(f"variables both intervened and observed: {sorted(both)}")
        if self.target in self.interventions:
            raise ValueError(f"target {self.target!r} is intervened")
        if self.target in self.evidence:
            raise ValueError(f"target {self.target!r} is observed")


@dataclass(frozen=True)
class IntervalResult:
    lower: float
    upper: float
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lo = min(max(float(self.lower), 0.0), 1.0)
        hi = min(max(float(self.upper), 0.0), 1.0)
        if lo > hi:
            if lo - hi > 1e-9:
                raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
            lo = hi
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def point(self) -> bool:
        return self.width < POINT_TOL

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def record(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "width": self.width,
            "point": self.point,
            "method": self.method,
            **{k: v for k, v in self.diagnostics.items() if np.isscalar(v)},
        }


# -- elimination with selectors --------------------------------------------------

def _factors(cn: CredalNetwork, relevant: set[str], evidence: Mapping[str, int],
             pmfs: Mapping[str, np.ndarray], selectors: Mapping[str, np.ndarray],
             free: str | None) -> list[Factor]:
    out = []
    for v in cn.order:
        if v not in relevant or v == free:
            continue
        node = cn[v]
        if node.cpt is not None:
            f = Factor(node.parents + (v,), np.asarray(node.cpt))
        elif v in selectors:
            f = Factor((_SELECTOR + v, v), selectors[v])
        elif v in pmfs:
            f = Factor((v,), np.asarray(pmfs[v], dtype=float))
        else:
            raise NetworkError(f"credal root {v!r} has no PMF assigned")
        out.append(f.reduce(evidence))
    return out


def joint_table(cn: CredalNetwork, keep: Sequence[str], evidence: Mapping[str, int] | None = None,
                pmfs: Mapping[str, np.ndarray] | None = None,
                selectors: Mapping[str, np.ndarray] | None = None,
                free: str | None = None) -> np.ndarray:
    """Unnormalised ``P(keep, evidence)`` with axes ``keep`` then one axis per selector.

    ``selectors`` maps credal roots to vertex matrices (one row per vertex);
    ``free`` names a root whose prior is left out and whose axis is appended last.
    """
    evidence = dict(evidence or {})
    pmfs = pmfs or {}
    selectors = selectors or {}
    relevant = cn.ancestors(list(keep) + list(evidence))
    sel = [s for s in selectors if s in relevant]
    factors = _factors(cn, relevant, evidence, pmfs, {s: selectors[s] for s in sel}, free)
    order = list(keep) + [_SELECTOR + s for s in sel] + ([free] if free else [])
    rank = {v: cn.index(v) for v in cn.nodes}
    res = eliminate(factors, order, rank)
    return res.table


def _relevant_roots(cn: CredalNetwork, query: CausalQuery) -> list[str]:
    relevant = cn.ancestors([query.target] + list(query.evidence))
    return [v for v in cn.credal_roots if v in relevant]


def _check_query(cn: CredalNetwork, query: CausalQuery):
    for v in [query.target, *query.interventions, *query.evidence]:
        if v not in cn:
            raise NetworkError(f"unknown node {v!r}")
    if not 0 <= query.target_state < cn.card(query.target):
        raise NetworkError(f"target state {query.target_state} out of range")
    for v, s in {**query.interventions, **query.evidence}.items():
        if not 0 <= int(s) < cn.card(v):
            raise NetworkError(f"state {s} out of range for {v!r}")


def ve_precise(cn: CredalNetwork, query: CausalQuery, pmfs: Mapping[str, np.ndarray] | None = None) -> float:
    """Exact ``P(target | do(...), evidence)`` in a network whose relevant roots are all precise.

    ``pmfs`` may fix credal roots to specific members.
    """
    _check_query(cn, query)
    net = intervene(cn, query.interventions)
    table = joint_table(net, [query.target], query.evidence, pmfs=pmfs)
    den = float(table.sum())
    if den <= EVIDENCE_TOL:
        raise ZeroEvidenceProbability(f"P(evidence) = {den:.3g}")
    return float(table[query.target_state]) / den


def bounds_exact(cn: CredalNetwork, query: CausalQuery, cap: int = DEFAULT_COMBINATION_CAP) -> IntervalResult:
    """Exact bounds: extrema over all combinations of credal-root vertices."""
    _check_query(cn, query)
    net = intervene(cn, query.interventions)
    pmfs, selectors, counts = {}, {}, {}
    for u in _relevant_roots(net, query):
        verts = net.vertices(u)
        counts[u] = len(verts)
        if len(verts) == 1:
            pmfs[u] = verts[0]
        else:
            selectors[u] = verts
    n_comb = math.prod(len(v) for v in selectors.values())
    if n_comb > cap:
        raise VertexExplosion(f"{n_comb} vertex combinations exceed the cap {cap}")
    table = joint_table(net, [query.target], query.evidence, pmfs=pmfs, selectors=selectors)
    den = table.sum(axis=0)
    num = table[query.target_state]
    valid = den > EVIDENCE_TOL
    if not np.any(valid):
        raise ZeroEvidenceEverywhere("evidence has zero probability at every vertex combination")
    ratio = np.where(valid, num / np.where(valid, den, 1.0), np.nan)
    lo_i = np.unravel_index(np.nanargmin(ratio), ratio.shape) if ratio.ndim else ()
    hi_i = np.unravel_index(np.nanargmax(ratio), ratio.shape) if ratio.ndim else ()
    diag = {
        "combinations": int(n_comb),
        "skipped": int(np.size(valid) - np.count_nonzero(valid)),
        "vertex_counts": counts,
        "argmin": dict(zip(selectors, map(int, lo_i))),
        "argmax": dict(zip(selectors, map(int, hi_i))),
    }
    return IntervalResult(float(np.nanmin(ratio)), float(np.nanmax(ratio)), EXACT, diag)


# -- approximate bounds --------------------------------------------------------------

@dataclass(frozen=True)
class ApproxConfig:
    restarts: int = 10
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0


def _initial_pmf(net: CredalNetwork, u: str, rng: np.random.Generator) -> np.ndarray:
    try:
        verts = net.vertices(u)
    except VertexExplosion:
        from .geometry import sample_point
        return sample_point(net[u].credal, rng)
    return verts[rng.integers(len(verts))]


def _ascend(net, query, free_roots, fixed, direction, rng, config):
    """One restart of coordinate-wise linear-fractional optimisation."""
    better = (lambda a, b: a > b + config.tol) if direction == MAX else (lambda a, b: a < b - config.tol)
    pmfs = dict(fixed)
    for u in free_roots:
        pmfs[u] = _initial_pmf(net, u, rng)
    table = joint_table(net, [query.target], query.evidence, pmfs=pmfs)
    if table.sum() <= EVIDENCE_TOL:
        raise DenominatorVanishes("evidence impossible at the starting point")
    value = float(table[query.target_state] / table.sum())
    sweeps = 0
    for sweeps in range(1, config.max_iters + 1):
        start = value
        for u in free_roots:
            others = {k: v for k, v in pmfs.items() if k != u}
            t = joint_table(net, [query.target], query.evidence, pmfs=others, free=u)
            num, den = t[query.target_state], t.sum(axis=0)
            cand, p = linear_fractional_optimize(net[u].credal, (num, 0.0), (den, 0.0), direction)
            if better(cand, value) or (cand == value):
                pmfs[u], value = p, cand
        if not better(value, start):
            break
    return value, sweeps


def bounds_approx(cn: CredalNetwork, query: CausalQuery, config: ApproxConfig | None = None) -> IntervalResult:
    """Inner approximation of the bounds by restarted coordinate ascent over credal roots.

    With every root but one fixed, numerator and denominator of the query are
    affine in the free root's PMF, so each coordinate step is a
    linear-fractional program over that root's credal set.
    """
    config = config or ApproxConfig()
    _check_query(cn, query)
    net = intervene(cn, query.interventions)
    fixed, free = {}, []
    for u in _relevant_roots(net, query):
        try:
            verts = net.vertices(u)
        except VertexExplosion:
            free.append(u)
            continue
        if len(verts) == 1:
            fixed[u] = verts[0]
        else:
            free.append(u)
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    results, sweeps, failed = {}, 0, 0
    for direction, ss in zip((MIN, MAX), seeds):
        rng = np.random.default_rng(ss)
        best = None
        n_restarts = config.restarts if free else 1
        for _ in range(n_restarts):
            try:
                value, k = _ascend(net, query, free, fixed, direction, rng, config)
            except DenominatorVanishes:
                failed += 1
                continue
            sweeps += k
            if best is None or (value < best if direction == MIN else value > best):
                best = value
        if best is None:
            raise DenominatorVanishes("evidence impossible at every restart")
        results[direction] = best
    diag = {"restarts": config.restarts, "sweeps": sweeps, "failed_restarts": failed,
            "free_roots": len(free)}
    return IntervalResult(results[MIN], results[MAX], APPROX, diag)


def bounds(cn: CredalNetwork, query: CausalQuery, method: str = EXACT,
           config: ApproxConfig | None = None) -> IntervalResult:
    if method == EXACT:
        return bounds_exact(cn, query)
    if method == APPROX:
        return bounds_approx(cn, query, config)
    raise ValueError(f"unknown method {method!r}")


# -- observational marginals of large models -------------------------------------------

class PSCMMarginals:
    """Marginals of a PSCM's endogenous joint, computed on demand by elimination.

    Stands in for :class:`~credalscm.scm.EmpiricalDistribution` when the full
    joint is too large to tabulate; identification only ever asks for marginals.
    """

    def __init__(self, pscm: ProbabilisticSCM):
        self.network = precise_network(pscm)
        self.variable_order = tuple(pscm.model.endogenous)
        self.cardinalities = tuple(pscm.model.card(x) for x in self.variable_order)
        self._memo: dict[tuple[str, ...], np.ndarray] = {}

    def marginal(self, variables: Sequence[str]) -> np.ndarray:
        key = tuple(variables)
        if key not in self._memo:
            table = joint_table(self.network, list(key))
            table.setflags(write=False)
            self._memo[key] = table
        return self._memo[key]

    def prob(self, assignment: Mapping[str, int]) -> float:
        names = list(assignment)
        return float(self.marginal(names)[tuple(assignment[v] for v in names)])


# -- counterfactuals -------------------------------------------------------------------

def counterfactual_query(observed: Mapping[str, int], hypothetical: Mapping[str, int],
                         target: str, target_state: int = 0) -> CausalQuery:
    """Query on the twin network: evidence in the factual world, surgery in the replica world."""
    return CausalQuery(
        target=primed(target),
        target_state=target_state,
        interventions={primed(k): v for k, v in hypothetical.items()},
        evidence=dict(observed),
    )


def counterfactual_bounds(cn: CredalNetwork, observed: Mapping[str, int], hypothetical: Mapping[str, int],
                          target: str, target_state: int = 0, method: str = EXACT,
                          config: ApproxConfig | None = None) -> IntervalResult:
    """Bounds on ``P(target'_{hypothetical} = target_state | observed)``.

    ``target`` and the keys of ``hypothetical`` may be given with or without
    the replica suffix; ``observed`` refers to the factual world.
    """
    tw = twin(cn)
    query = counterfactual_query(observed, hypothetical, target, target_state)
    return bounds(tw, query, method, config)


__all__ = [
    "APPROX", "EXACT", "ApproxConfig", "CausalQuery", "Factor", "IntervalResult", "PSCMMarginals",
    "bounds", "bounds_approx", "bounds_exact", "counterfactual_bounds", "counterfactual_query",
    "eliminate", "joint_table", "multiply", "ve_precise",
]
