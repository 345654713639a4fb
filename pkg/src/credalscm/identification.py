"""Credal sets of exogenous PMFs consistent with an observed endogenous joint.

For each exogenous ``U`` with children ``X_1..X_n`` (topological order) every
joint assignment of the children and their endogenous parents yields one
equality::

    sum_{u : f_k(pa_k, u) = x_k for all k} P(u) = prod_k P~(x_k | x_1..x_{k-1}, pa_1..pa_k)

With a single child this reduces to ``sum_{u in f^-1_{X|pa}(x)} P(u) = P~(x | pa)``.
A variable that is both a child and a parent of a later child is assigned once,
so the parent coordinate always agrees with the child coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .constraints import EQ, GE, LE, LinearConstraintSystem
from .errors import (
    DataError,
    InfeasibleIdentification,
    MismatchedIdentification,
    ModelError,
    NonPositiveCell,
    NotMarkovian,
    NotQuasiMarkovian,
)
from .geometry import polytope, sample_point
from .scm import (
    MARKOVIAN,
    CausalModel,
    EmpiricalDistribution,
    ProbabilisticSCM,
    induced_joint,
    topological_order,
    validate_model,
)

__all__ = [
    "IdentificationResult", "LinearConstraintSystem", "add_constraints",
    "identify", "identify_markovian", "identify_quasi_markovian", "verify_identification",
]


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    systems: Mapping[str, LinearConstraintSystem]
    diagnostics: Mapping[str, dict] = field(default_factory=dict)
    classification: str | None = None

    def __getitem__(self, u: str) -> LinearConstraintSystem:
        return self.systems[u]

    def __iter__(self):
        return iter(self.systems)

    def with_systems(self, updates: Mapping[str, LinearConstraintSystem]) -> "IdentificationResult":
        systems = dict(self.systems)
        diagnostics = {k: dict(v) for k, v in self.diagnostics.items()}
        for u, s in updates.items():
            if u not in systems:
                raise MismatchedIdentification(f"no credal set for {u!r}")
            systems[u] = s
            diagnostics.setdefault(u, {}).update(constraints=len(s.eq_rhs) + len(s.ineq_rhs))
        return IdentificationResult(systems, diagnostics, self.classification)

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "systems": {u: s.to_dict() for u, s in self.systems.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IdentificationResult":
        try:
            systems = {u: LinearConstraintSystem.from_dict(s) for u, s in d["systems"].items()}
        except (KeyError, AttributeError) as exc:
            raise DataError(f"malformed identification block: {exc}") from exc
        return cls(systems, {}, d.get("classification"))


def _u_last_table(model: CausalModel, x: str) -> tuple[np.ndarray, list[str]]:
    """SE table of ``x`` with its exogenous axis moved last; returns (table, endogenous parents)."""
    eq = model.equations[x]
    u = model.exogenous_parent(x)
    endo = [p for p in eq.parents if p != u]
    axes = [eq.parents.index(p) for p in endo] + [eq.parents.index(u)]
    return np.transpose(eq.table, axes), endo


def _constraints_for(model: CausalModel, empirical, u: str, children: Sequence[str], strict: bool):
    """Rows and right-hand sides for one exogenous variable."""
    tables = [_u_last_table(model, x) for x in children]
    scope = list(children)
    for _, endo in tables:
        scope += [p for p in endo if p not in scope]
    missing = [v for v in scope if v not in empirical.variable_order]
    if missing:
        raise MismatchedIdentification(f"empirical distribution lacks {missing}")
    pos = {v: i for i, v in enumerate(scope)}

    # conditioning set of the k-th factor: earlier children and parents so far
    factors = []
    cond: list[str] = []
    for k, (x, (_, endo)) in enumerate(zip(children, tables)):
        if k and children[k - 1] not in cond:
            cond = cond + [children[k - 1]]
        cond = cond + [p for p in endo if p not in cond and p != x]
        cond_k = [v for v in cond if v != x]
        num = empirical.marginal([x] + cond_k)
        den = empirical.marginal(cond_k) if cond_k else None
        factors.append((x, cond_k, num, den))

    n_u = model.card(u)
    rows, rhs = [], []
    skipped = 0
    for assign in itertools.product(*(range(model.card(v)) for v in scope)):
        mask = np.ones(n_u, dtype=bool)
        for x, (table, endo) in zip(children, tables):
            mask &= table[tuple(assign[pos[p]] for p in endo)] == assign[pos[x]]
        value = 1.0
        defined = True
        for x, cond_k, num, den in factors:
            key = tuple(assign[pos[v]] for v in cond_k)
            d = float(den[key]) if den is not None else 1.0
            if d <= 0.0:
                if strict:
                    raise NonPositiveCell(f"P~({', '.join(cond_k)}) vanishes at {key}")
                defined = False
                break
            f = float(num[(assign[pos[x]],) + key]) / d
            value *= f
            if value == 0.0:
                break
        if not defined:
            skipped += 1
            continue
        rows.append(mask.astype(float))
        rhs.append(value)
    return rows, rhs, skipped


def _build(model, empirical, groups: Mapping[str, list[str]], strict: bool, check: bool, classification):
    if strict and not getattr(empirical, "strictly_positive", True):
        raise NonPositiveCell("empirical distribution has zero cells")
    systems, diagnostics = {}, {}
    for u, children in groups.items():
        rows, rhs, skipped = _constraints_for(model, empirical, u, children, strict)
        n = model.card(u)
        system = LinearConstraintSystem(n, np.array(rows).reshape(len(rows), n), rhs)
        poly = polytope(system)
        feasible = poly.feasible if check else None
        diagnostics[u] = {
            "children": list(children),
            "constraints": len(rhs),
            "skipped": skipped,
            "feasible": feasible,
            "violation": poly.violation if check else None,
        }
        if check and not feasible:
            raise InfeasibleIdentification(
                f"no PMF for {u!r} reproduces the empirical distribution "
                f"(violation {poly.violation:.3g})"
            )
        systems[u] = system
    return IdentificationResult(systems, diagnostics, classification)


def identify_markovian(model: CausalModel, empirical: EmpiricalDistribution, *,
                       strict: bool = True, check: bool = True) -> IdentificationResult:
    """Credal sets for a Markovian model, one child per exogenous variable.

    ``strict=False`` admits zero cells; constraints whose conditioning event
    has zero probability are then dropped (counted as ``skipped``).
    """
    cls = validate_model(model)
    if cls != MARKOVIAN:
        raise NotMarkovian(f"model is {cls}")
    groups = {u: model.children(u) for u in model.exogenous}
    return _build(model, empirical, groups, strict, check, cls)


def identify_quasi_markovian(model: CausalModel, empirical: EmpiricalDistribution, *,
                             strict: bool = True, check: bool = True) -> IdentificationResult:
    """Credal sets for a (quasi-)Markovian model; confounders may have many children."""
    try:
        cls = validate_model(model)
    except ModelError as exc:
        raise NotQuasiMarkovian(str(exc)) from exc
    order = topological_order(model)
    groups = {u: sorted(model.children(u), key=order.index) for u in model.exogenous}
    return _build(model, empirical, groups, strict, check, cls)


def identify(model: CausalModel, empirical: EmpiricalDistribution, **kwargs) -> IdentificationResult:
    """Pick the Markovian or quasi-Markovian builder from the model's class."""
    try:
        cls = validate_model(model)
    except ModelError as exc:
        raise NotQuasiMarkovian(str(exc)) from exc
    if cls == MARKOVIAN:
        return identify_markovian(model, empirical, **kwargs)
    return identify_quasi_markovian(model, empirical, **kwargs)


def add_constraints(system: LinearConstraintSystem,
                    extra: Iterable[tuple[Sequence[float], str, float]]) -> LinearConstraintSystem:
    """Append expert constraints ``(coefficients, relation, rhs)``; relation is '=', '<=' or '>='."""
    eqs, ineqs = [], []
    for coef, rel, rhs in extra:
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (system.dimension,):
            raise DataError(f"constraint needs {system.dimension} coefficients")
        if rel == EQ:
            eqs.append((coef, rhs))
        elif rel in (LE, GE):
            ineqs.append((coef, rel, rhs))
        else:
            raise DataError(f"unknown relation {rel!r}")
    if not eqs and not ineqs:
        return system
    out = system.with_constraints(eqs, ineqs)
    poly = polytope(out)
    if not poly.feasible:
        raise InfeasibleIdentification(f"expert constraints are inconsistent (violation {poly.violation:.3g})")
    return out


def _joint_deviation(pscm: ProbabilisticSCM, empirical) -> float:
    joint = induced_joint(pscm, empirical.variable_order)
    return float(np.max(np.abs(joint.probabilities - empirical.probabilities)))


def verify_identification(model: CausalModel, empirical: EmpiricalDistribution,
                          result: IdentificationResult, samples: int = 10, *,
                          ground_truth: Mapping[str, Sequence[float]] | None = None,
                          seed: int = 0, tol: float = 1e-9) -> dict:
    """Check that sampled members of every credal set reproduce ``empirical``.

    Returns a report with the largest absolute deviation of the re-induced joint
    and, when ``ground_truth`` is given, whether it lies in every credal set.
    """
    seeds = np.random.SeedSequence(seed).spawn(max(samples, 0))
    deviations = []
    for s in seeds:
        child = s.spawn(len(result.systems))
        pmfs = {u: sample_point(sys_, c) for (u, sys_), c in zip(result.systems.items(), child)}
        deviations.append(_joint_deviation(ProbabilisticSCM(model, pmfs), empirical))
    report = {
        "samples": samples,
        "max_deviation": max(deviations) if deviations else 0.0,
        "ok": all(d <= tol for d in deviations),
    }
    if ground_truth is not None:
        residuals = {u: result[u].residual(ground_truth[u]) for u in result}
        report["ground_truth_residuals"] = residuals
        report["ground_truth_member"] = all(r <= tol for r in residuals.values())
        report["ok"] = report["ok"] and report["ground_truth_member"]
    return report
