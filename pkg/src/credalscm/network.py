"""Credal networks compiled from SCMs: surgery, twin networks, virtual evidence."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .constraints import LinearConstraintSystem
from .errors import (
    CyclicGraph,
    DataError,
    InterveneExogenous,
    LikelihoodOutOfRange,
    MismatchedIdentification,
    NetworkError,
)
from .geometry import polytope
from .identification import IdentificationResult
from .scm import ENDOGENOUS, EXOGENOUS, TWIN_SUFFIX, CausalModel, ProbabilisticSCM

AUXILIARY = "auxiliary"
CPT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Node:
    """One variable of a credal network.

    ``cpt`` has the parents' axes (declared order) followed by the node's own
    axis. Exactly one of ``cpt`` and ``credal`` is set; ``credal`` only on roots.
    """

    id: str
    kind: str
    cardinality: int
    parents: tuple[str, ...] = ()
    cpt: np.ndarray | None = None
    credal: LinearConstraintSystem | None = None

    @property
    def precise(self) -> bool:
        return self.cpt is not None

    @property
    def degenerate(self) -> bool:
        return self.cpt is not None and bool(np.all((self.cpt == 0) | (self.cpt == 1)))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class CredalNetwork:
    """DAG plus one (credal) CPT per node. Instances are never mutated."""

    def __init__(self, nodes: Iterable[Node]):
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise NetworkError(f"duplicate node {node.id!r}")
            self.nodes[node.id] = node
        for node in self.nodes.values():
            self._check(node)
        self._index = {v: i for i, v in enumerate(self.nodes)}
        self._order = self._toposort()

    def _check(self, node: Node):
        for p in node.parents:
            if p not in self.nodes:
                raise NetworkError(f"{node.id!r}: unknown parent {p!r}")
        if (node.cpt is None) == (node.credal is None):
            raise NetworkError(f"{node.id!r}: exactly one of cpt/credal required")
        if node.credal is not None:
            if node.parents:
                raise NetworkError(f"{node.id!r}: credal sets are only allowed at root nodes")
            if node.credal.dimension != node.cardinality:
                raise NetworkError(f"{node.id!r}: credal set dimension mismatch")
            return
        shape = tuple(self.nodes[p].cardinality for p in node.parents) + (node.cardinality,)
        if node.cpt.shape != shape:
            raise NetworkError(f"{node.id!r}: CPT shape {node.cpt.shape} != {shape}")
        if np.any(node.cpt < 0) or np.any(np.abs(node.cpt.sum(axis=-1) - 1.0) > CPT_TOL):
            raise NetworkError(f"{node.id!r}: CPT columns must be PMFs")

    def _toposort(self) -> list[str]:
        indeg = {v: len(n.parents) for v, n in self.nodes.items()}
        kids: dict[str, list[str]] = {v: [] for v in self.nodes}
        for v, n in self.nodes.items():
            for p in n.parents:
                kids[p].append(v)
        ready = [v for v in self.nodes if indeg[v] == 0]
        order = []
        while ready:
            ready.sort(key=self._index.get)
            v = ready.pop(0)
            order.append(v)
            for c in kids[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise CyclicGraph("credal network graph has a cycle")
        return order

    # -- structure -------------------------------------------------------

    def __getitem__(self, v: str) -> Node:
        return self.nodes[v]

    def __contains__(self, v: str) -> bool:
        return v in self.nodes

    def index(self, v: str) -> int:
        return self._index[v]

    @property
    def order(self) -> list[str]:
        return list(self._order)

    def card(self, v: str) -> int:
        return self.nodes[v].cardinality

    def parents(self, v: str) -> tuple[str, ...]:
        return self.nodes[v].parents

    def children(self, v: str) -> list[str]:
        return [c for c, n in self.nodes.items() if v in n.parents]

    def edges(self) -> list[tuple[str, str]]:
        return [(p, v) for v, n in self.nodes.items() for p in n.parents]

    def ancestors(self, targets: Iterable[str]) -> set[str]:
        """``targets`` together with all their ancestors."""
        seen: set[str] = set()
        stack = list(targets)
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(self.nodes[v].parents)
        return seen

    @property
    def credal_roots(self) -> list[str]:
        return [v for v, n in self.nodes.items() if n.credal is not None]

    @property
    def precise(self) -> bool:
        return not self.credal_roots

    def vertices(self, v: str) -> np.ndarray:
        return polytope(self.nodes[v].credal).vertices

    def replace_nodes(self, nodes: Iterable[Node], extra: Iterable[Node] = ()) -> "CredalNetwork":
        """New network with some nodes swapped out; untouched nodes are shared."""
        swap = {n.id: n for n in nodes}
        unknown = set(swap) - set(self.nodes)
        if unknown:
            raise NetworkError(f"unknown nodes {sorted(unknown)}")
        return CredalNetwork([swap.get(v, n) for v, n in self.nodes.items()] + list(extra))

    def with_pmfs(self, pmfs: Mapping[str, Sequence[float]]) -> "CredalNetwork":
        """Fix credal roots to given PMFs (a member of the credal network)."""
        updates = []
        for v, p in pmfs.items():
            node = self.nodes[v]
            if node.credal is None:
                raise NetworkError(f"{v!r} is not a credal root")
            updates.append(replace(node, cpt=_frozen(p), credal=None))
        return self.replace_nodes(updates)

    def __repr__(self):
        return f"CredalNetwork(nodes={list(self.nodes)}, credal_roots={self.credal_roots})"

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        out = []
        for n in self.nodes.values():
            d = {"id": n.id, "kind": n.kind, "cardinality": n.cardinality, "parents": list(n.parents)}
            if n.credal is not None:
                d["ccpt"] = n.credal.to_dict()
            else:
                d["cpt"] = n.cpt.ravel().tolist()
            out.append(d)
        return {"credal_network": {"nodes": out}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CredalNetwork":
        try:
            raw = d["credal_network"]["nodes"]
            cards = {n["id"]: int(n["cardinality"]) for n in raw}
            nodes = []
            for n in raw:
                parents = tuple(n.get("parents", ()))
                if "ccpt" in n:
                    nodes.append(Node(n["id"], n["kind"], cards[n["id"]], parents,
                                      credal=LinearConstraintSystem.from_dict(n["ccpt"])))
                else:
                    shape = tuple(cards[p] for p in parents) + (cards[n["id"]],)
                    nodes.append(Node(n["id"], n["kind"], cards[n["id"]], parents,
                                      cpt=_frozen(np.reshape(n["cpt"], shape))))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed credal network: {exc}") from exc
        return cls(nodes)


def compile_network(model: CausalModel, ident: IdentificationResult) -> CredalNetwork:
    """Credal network over the causal diagram: K(U) at exogenous roots, SE-derived CPTs elsewhere."""
    if set(ident.systems) != set(model.exogenous):
        raise MismatchedIdentification(
            f"credal sets for {sorted(ident.systems)} but exogenous variables {sorted(model.exogenous)}"
        )
    nodes = []
    for v in model.variables.values():
        if v.endogenous:
            cpt = model.equation_cpt(v.id)
            cpt.setflags(write=False)
            nodes.append(Node(v.id, ENDOGENOUS, v.cardinality, model.parents(v.id), cpt=cpt))
        else:
            system = ident[v.id]
            if system.dimension != v.cardinality:
                raise MismatchedIdentification(f"credal set of {v.id!r} has wrong dimension")
            nodes.append(Node(v.id, EXOGENOUS, v.cardinality, credal=system))
    return CredalNetwork(nodes)


def precise_network(pscm: ProbabilisticSCM) -> CredalNetwork:
    """The Bayesian network of a PSCM (no credal nodes)."""
    model = pscm.model
    nodes = []
    for v in model.variables.values():
        if v.endogenous:
            nodes.append(Node(v.id, ENDOGENOUS, v.cardinality, model.parents(v.id),
                              cpt=_frozen(model.equation_cpt(v.id))))
        else:
            nodes.append(Node(v.id, EXOGENOUS, v.cardinality, cpt=_frozen(pscm.exogenous_pmfs[v.id])))
    return CredalNetwork(nodes)


def intervene(cn: CredalNetwork, do: Mapping[str, int]) -> CredalNetwork:
    """Surgery: each target loses its incoming arcs and becomes a constant."""
    updates = []
    for x, state in do.items():
        if x not in cn:
            raise NetworkError(f"unknown node {x!r}")
        node = cn[x]
        if node.kind != ENDOGENOUS:
            raise InterveneExogenous(f"cannot intervene on {node.kind} node {x!r}")
        if not 0 <= int(state) < node.cardinality:
            raise NetworkError(f"state {state} out of range for {x!r}")
        cpt = np.zeros(node.cardinality)
        cpt[int(state)] = 1.0
        updates.append(replace(node, parents=(), cpt=_frozen(cpt), credal=None))
    return cn.replace_nodes(updates) if updates else cn


def primed(v: str) -> str:
    return v if v.endswith(TWIN_SUFFIX) else v + TWIN_SUFFIX


def twin(cn: CredalNetwork) -> CredalNetwork:
    """Add a replica ``X'`` of each endogenous node sharing exogenous parents and CPTs."""
    if any(v.endswith(TWIN_SUFFIX) for v in cn.nodes):
        raise NetworkError("network already contains replica nodes")
    endo = {v for v, n in cn.nodes.items() if n.kind == ENDOGENOUS}
    extra = []
    for v in cn.order:
        node = cn[v]
        if v not in endo:
            continue
        parents = tuple(primed(p) if p in endo else p for p in node.parents)
        extra.append(replace(node, id=primed(v), parents=parents))
    return cn.replace_nodes([], extra)


def attach_virtual_evidence(cn: CredalNetwork, u: str, likelihood: Sequence[float] | Mapping[int, float],
                            name: str | None = None) -> CredalNetwork:
    """Add a binary child ``Z`` of ``u`` with ``P(Z=1 | u) = likelihood[u]``.

    Observing ``Z = 1`` then encodes the noisy observation of ``u``.
    """
    if u not in cn:
        raise NetworkError(f"unknown node {u!r}")
    n = cn.card(u)
    if isinstance(likelihood, Mapping):
        lik = np.zeros(n)
        for k, val in likelihood.items():
            lik[int(k)] = val
    else:
        lik = np.asarray(likelihood, dtype=float)
    if lik.shape != (n,):
        raise LikelihoodOutOfRange(f"likelihood needs {n} entries")
    if np.any(lik < 0) or np.any(lik > 1) or not np.all(np.isfinite(lik)):
        raise LikelihoodOutOfRange("likelihood values must lie in [0, 1]")
    z = name or f"Z_{u}"
    cpt = np.stack([1.0 - lik, lik], axis=-1)
    return cn.replace_nodes([], [Node(z, AUXILIARY, 2, (u,), cpt=_frozen(cpt))])


__all__ = [
    "AUXILIARY", "CredalNetwork", "Node", "attach_virtual_evidence", "compile_network",
    "intervene", "precise_network", "primed", "twin",
]
