"""JSON model files.

Schema (all keys except ``variables`` and ``equations`` optional)::

    {
      "variables": [{"id": "X1", "kind": "endogenous", "cardinality": 2}, ...],
      "equations": [{"child": "X2", "parents": ["X1", "U2"], "table": [...]}, ...],
      "exogenous_pmfs": {"U1": [0.2, 0.8], ...},
      "empirical": {"variable_order": ["X1", "X2"], "probabilities": [...]},
      "identification": {"classification": ..., "systems": {"U1": <constraint system>}},
      "expert_constraints": {"U1": [{"coefficients": [...], "relation": "<=", "rhs": 0.3}]},
      "query": {"target": "X3", "target_state": 1, "interventions": {"X2": 0}, "evidence": {}},
      "counterfactual": {"observed": {"X3": 0}, "hypothetical": {"X3": 1}, "target": "X4", "target_state": 1},
      "options": {"method": "exact", "seed": 0, ...}
    }

Tables are flat and row-major over the parents in the listed order; the
empirical vector is row-major over ``variable_order`` with cardinalities taken
from ``variables``. A constraint system is
``{"dimension": n, "equalities": [{"coefficients", "rhs"}], "inequalities": [...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import CredalSCMError, ParseError
from .identification import IdentificationResult
from .scm import CausalModel, EmpiricalDistribution, ProbabilisticSCM, StructuralEquation, Variable

_KNOWN_KEYS = {"variables", "equations", "exogenous_pmfs", "empirical", "identification",
               "expert_constraints", "query", "counterfactual", "options"}


@dataclass
class ModelDocument:
    model: CausalModel
    exogenous_pmfs: dict[str, np.ndarray] | None = None
    empirical: EmpiricalDistribution | None = None
    identification: IdentificationResult | None = None
    expert_constraints: dict[str, list[dict]] = field(default_factory=dict)
    query: dict | None = None
    counterfactual: dict | None = None
    options: dict = field(default_factory=dict)

    @property
    def pscm(self) -> ProbabilisticSCM | None:
        if self.exogenous_pmfs is None:
            return None
        return ProbabilisticSCM(self.model, self.exogenous_pmfs)


def _require(d: Mapping, key: str, where: str):
    if not isinstance(d, Mapping) or key not in d:
        raise ParseError(f"{where}: missing key {key!r}")
    return d[key]


def model_from_dict(d: Mapping) -> CausalModel:
    variables = []
    for i, v in enumerate(_require(d, "variables", "document")):
        where = f"variables[{i}]"
        card = _require(v, "cardinality", where)
        if not isinstance(card, int) or isinstance(card, bool):
            raise ParseError(f"{where}: cardinality must be an integer")
        variables.append(Variable(str(_require(v, "id", where)), str(_require(v, "kind", where)), card))
    cards = {v.id: v.cardinality for v in variables}
    equations = []
    for i, e in enumerate(_require(d, "equations", "document")):
        where = f"equations[{i}]"
        child = _require(e, "child", where)
        parents = list(_require(e, "parents", where))
        flat = np.asarray(_require(e, "table", where))
        unknown = [p for p in parents if p not in cards]
        shape = tuple(cards.get(p, 0) for p in parents)
        if unknown:
            raise ParseError(f"{where}: unknown parents {unknown}")
        if flat.ndim != 1 or flat.size != int(np.prod(shape)):
            raise ParseError(f"{where}: table needs {int(np.prod(shape))} entries")
        if flat.size and not np.issubdtype(flat.dtype, np.integer):
            raise ParseError(f"{where}: table entries must be integers")
        equations.append(StructuralEquation(child, parents, flat.reshape(shape)))
    return CausalModel(variables, equations)


def model_to_dict(model: CausalModel) -> dict:
    return {
        "variables": [
            {"id": v.id, "kind": v.kind, "cardinality": v.cardinality} for v in model.variables.values()
        ],
        "equations": [
            {"child": e.child, "parents": list(e.parents), "table": e.table.ravel().tolist()}
            for e in model.equations.values()
        ],
    }


def parse_document(d: Any) -> ModelDocument:
    if not isinstance(d, Mapping):
        raise ParseError("model file must hold a JSON object")
    extra = set(d) - _KNOWN_KEYS
    if extra:
        raise ParseError(f"unknown top-level keys {sorted(extra)}")
    model = model_from_dict(d)
    doc = ModelDocument(model)
    try:
        if "exogenous_pmfs" in d:
            doc.exogenous_pmfs = {u: np.asarray(p, dtype=float) for u, p in d["exogenous_pmfs"].items()}
        if "empirical" in d:
            emp = d["empirical"]
            order = list(_require(emp, "variable_order", "empirical"))
            missing = [v for v in order if v not in model.variables]
            if missing:
                raise ParseError(f"empirical: unknown variables {missing}")
            doc.empirical = EmpiricalDistribution(
                order, [model.card(v) for v in order], np.asarray(_require(emp, "probabilities", "empirical"), float)
            )
        if "identification" in d:
            doc.identification = IdentificationResult.from_dict(d["identification"])
        doc.expert_constraints = {u: list(rows) for u, rows in d.get("expert_constraints", {}).items()}
        doc.query = dict(d["query"]) if "query" in d else None
        doc.counterfactual = dict(d["counterfactual"]) if "counterfactual" in d else None
        doc.options = dict(d.get("options", {}))
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, CredalSCMError):
            raise
        raise ParseError(f"malformed model file: {exc}") from exc
    return doc


def document_to_dict(doc: ModelDocument) -> dict:
    out = model_to_dict(doc.model)
    if doc.exogenous_pmfs is not None:
        out["exogenous_pmfs"] = {u: np.asarray(p, float).tolist() for u, p in doc.exogenous_pmfs.items()}
    if doc.empirical is not None:
        out["empirical"] = {
            "variable_order": list(doc.empirical.variable_order),
            "probabilities": doc.empirical.probabilities.tolist(),
        }
    if doc.identification is not None:
        out["identification"] = doc.identification.to_dict()
    if doc.expert_constraints:
        out["expert_constraints"] = doc.expert_constraints
    for key in ("query", "counterfactual"):
        if getattr(doc, key) is not None:
            out[key] = getattr(doc, key)
    if doc.options:
        out["options"] = doc.options
    return out


def loads(text: str) -> ModelDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return parse_document(data)


def load(path) -> ModelDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def dumps(doc: ModelDocument) -> str:
    return json.dumps(document_to_dict(doc), indent=2)


def dump(doc: ModelDocument, path) -> None:
    Path(path).write_text(dumps(doc) + "\n", encoding="utf-8")


def expert_rows(doc: ModelDocument) -> dict[str, list[tuple]]:
    """Expert constraints as ``(coefficients, relation, rhs)`` tuples per exogenous variable."""
    out = {}
    for u, rows in doc.expert_constraints.items():
        try:
            out[u] = [(r["coefficients"], r["relation"], float(r["rhs"])) for r in rows]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"expert_constraints[{u!r}]: {exc}") from exc
    return out


def load_empirical_csv(path, model: CausalModel) -> EmpiricalDistribution:
    """Complete records (header = variable ids, one 0-based state per cell) turned into frequencies."""
    from .scm import empirical_from_data

    try:
        raw = np.genfromtxt(path, delimiter=",", names=True, dtype=int, encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read data file {path}: {exc}") from exc
    names = list(raw.dtype.names or ())
    unknown = [n for n in names if n not in model.variables]
    if unknown:
        raise ParseError(f"data file has unknown columns {unknown}")
    rows = np.atleast_1d(raw)
    data = [[int(r[n]) for n in names] for r in rows]
    return empirical_from_data(data, names, [model.card(n) for n in names])


__all__ = [
    "ModelDocument", "document_to_dict", "dump", "dumps", "expert_rows", "load", "load_empirical_csv",
    "loads", "model_from_dict", "model_to_dict", "parse_document",
]
