"""Polytopes given by a :class:`LinearConstraintSystem` intersected with the simplex.

LPs are solved with HiGHS through :func:`scipy.optimize.linprog`. Vertex
enumeration is done here by enumerating basic feasible solutions of the
rank-reduced standard form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .constraints import GE, LE, LinearConstraintSystem
from .errors import DenominatorVanishes, Infeasible, Unbounded, VertexExplosion

FEASIBILITY_TOL = 1e-8
DEDUP_TOL = 1e-7
PIVOT_TOL = 1e-10
PHASE_ONE_TOL = 1e-7
DENOMINATOR_TOL = 1e-12
DEFAULT_VERTEX_CAP = 100_000
# Upper bound on candidate bases examined before giving up.
DEFAULT_BASIS_CAP = 5_000_000
_CHUNK = 20_000

MIN, MAX = "min", "max"


def independent_rows(a: np.ndarray, tol: float = 1e-9, seed_rows: np.ndarray | None = None) -> list[int]:
    """Indices of rows of ``a`` kept by a greedy pass that drops rows in the span of earlier ones."""
    basis: list[np.ndarray] = []
    for row in seed_rows if seed_rows is not None else ():
        _absorb(basis, row, tol)
    keep = []
    for i, row in enumerate(a):
        if _absorb(basis, row, tol):
            keep.append(i)
    return keep


def _absorb(basis: list[np.ndarray], row: np.ndarray, tol: float) -> bool:
    norm = np.linalg.norm(row)
    if norm == 0:
        return False
    r = np.asarray(row, dtype=float)
    for q in basis:  # modified Gram-Schmidt, applied twice for stability
        r = r - (q @ r) * q
    for q in basis:
        r = r - (q @ r) * q
    rn = np.linalg.norm(r)
    if rn <= tol * max(1.0, norm):
        return False
    basis.append(r / rn)
    return True


def reduce_system(system: LinearConstraintSystem) -> LinearConstraintSystem:
    """Drop equality rows that are linear combinations of earlier rows.

    The implicit normalisation row is not used for the reduction, so a set of
    rows that partitions the states is kept whole.
    """
    keep = independent_rows(system.eq_matrix)
    return LinearConstraintSystem(
        system.dimension,
        system.eq_matrix[keep],
        system.eq_rhs[keep],
        system.ineq_matrix,
        system.ineq_rhs,
        system.ineq_relations,
    )


def phase_one(system: LinearConstraintSystem) -> tuple[float, np.ndarray]:
    """Minimal total constraint violation over the simplex and a minimiser."""
    n = system.dimension
    k = system.eq_rhs.size
    a_ub, b_ub = system.upper_form()
    m = b_ub.size
    # variables: p (n), s+ (k), s- (k), t (m)
    c = np.concatenate([np.zeros(n), np.ones(2 * k + m)])
    a_eq = np.zeros((k + 1, n + 2 * k + m))
    a_eq[:k, :n] = system.eq_matrix
    a_eq[:k, n : n + k] = np.eye(k)
    a_eq[:k, n + k : n + 2 * k] = -np.eye(k)
    a_eq[k, :n] = 1.0
    b_eq = np.concatenate([system.eq_rhs, [1.0]])
    kwargs = {}
    if m:
        a = np.zeros((m, n + 2 * k + m))
        a[:, :n] = a_ub
        a[:, n + 2 * k :] = -np.eye(m)
        kwargs = {"A_ub": a, "b_ub": b_ub}
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs", **kwargs)
    if res.status != 0:  # pragma: no cover - the phase-one LP is always feasible and bounded
        raise Infeasible(f"phase-one LP failed: {res.message}")
    return float(res.fun), res.x[:n]


@dataclass(frozen=True)
class VertexSet:
    vertices: np.ndarray
    dedup_tol: float = DEDUP_TOL

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


class Polytope:
    """Lazy geometric view of a constraint system; caches are create-once."""

    def __init__(self, system: LinearConstraintSystem, vertex_cap: int = DEFAULT_VERTEX_CAP,
                 basis_cap: int = DEFAULT_BASIS_CAP):
        self.system = system
        self.vertex_cap = vertex_cap
        self.basis_cap = basis_cap

    @cached_property
    def violation(self) -> float:
        return phase_one(self.system)[0]

    @property
    def feasible(self) -> bool:
        return self.violation <= PHASE_ONE_TOL

    def require_feasible(self):
        if not self.feasible:
            raise Infeasible(f"constraint system infeasible (phase-one violation {self.violation:.3g})")

    @cached_property
    def equality_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Independent equality rows, normalisation row appended when independent."""
        s = self.system
        n = s.dimension
        ones = np.ones((1, n))
        rows = np.vstack([s.eq_matrix, ones])
        rhs = np.concatenate([s.eq_rhs, [1.0]])
        keep = independent_rows(rows[:-1])
        if independent_rows(ones, seed_rows=rows[keep]):
            keep.append(len(rows) - 1)
        return rows[keep], rhs[keep]

    @cached_property
    def vertex_set(self) -> VertexSet:
        self.require_feasible()
        return VertexSet(_enumerate_vertices(self, self.vertex_cap, self.basis_cap))

    @property
    def vertices(self) -> np.ndarray:
        return self.vertex_set.vertices


def polytope(system: LinearConstraintSystem) -> Polytope:
    """The (memoised) polytope of ``system``."""
    p = system._cache.get("polytope")
    if p is None:
        p = system._cache["polytope"] = Polytope(system)
    return p


def _standard_form(poly: Polytope) -> tuple[np.ndarray, np.ndarray, int]:
    """Equality-only form over ``[p, slacks]`` with full row rank."""
    s = poly.system
    a_eq, b_eq = poly.equality_basis
    n = s.dimension
    m = s.ineq_rhs.size
    top = np.hstack([a_eq, np.zeros((a_eq.shape[0], m))])
    if m:
        sign = np.array([1.0 if r == LE else -1.0 for r in s.ineq_relations])
        bottom = np.hstack([s.ineq_matrix, np.diag(sign)])
        a = np.vstack([top, bottom])
        b = np.concatenate([b_eq, s.ineq_rhs])
        keep = independent_rows(a)
        a, b = a[keep], b[keep]
    else:
        a, b = top, b_eq
    return a, b, n


def _enumerate_vertices(poly: Polytope, vertex_cap: int, basis_cap: int) -> np.ndarray:
    a, b, n = _standard_form(poly)
    r, big_n = a.shape
    n_bases = math.comb(big_n, r)
    if n_bases > basis_cap:
        raise VertexExplosion(f"{n_bases} candidate bases exceed the cap {basis_cap}")
    row_norms = np.linalg.norm(a, axis=1)
    scale = float(np.prod(row_norms))
    found: list[np.ndarray] = []
    combos = itertools.combinations(range(big_n), r)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        chunk = chunk.reshape(-1, r)
        mats = np.transpose(a[:, chunk], (1, 0, 2))  # (c, r, r)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > PIVOT_TOL * max(scale, 1.0)
        if not np.any(ok):
            continue
        xb = np.linalg.solve(mats[ok], np.broadcast_to(b, (int(ok.sum()), r))[..., None])[..., 0]
        feas = np.all(xb >= -FEASIBILITY_TOL, axis=1)
        for cols, vals in zip(chunk[ok][feas], xb[feas]):
            z = np.zeros(big_n)
            z[cols] = np.clip(vals, 0.0, None)
            p = z[:n]
            if poly.system.residual(p) > FEASIBILITY_TOL:
                continue
            if any(np.max(np.abs(p - q)) <= DEDUP_TOL for q in found):
                continue
            found.append(p)
            if len(found) > vertex_cap:
                raise VertexExplosion(f"more than {vertex_cap} vertices")
    if not found:  # pragma: no cover - a feasible bounded polytope has a vertex
        raise Infeasible("no basic feasible solution found")
    verts = np.array(found)
    order = np.lexsort(verts.T[::-1])
    return verts[order]


def vertex_enumeration(system: LinearConstraintSystem) -> VertexSet:
    """All extreme points of the credal set (deduplicated at L-inf ``DEDUP_TOL``)."""
    return polytope(system).vertex_set


def lp_optimize(system: LinearConstraintSystem, objective: Sequence[float], direction: str = MAX
                ) -> tuple[float, np.ndarray]:
    """Optimise a linear objective over the credal set; returns (value, argument)."""
    poly = polytope(system)
    c = np.asarray(objective, dtype=float)
    if c.shape != (system.dimension,):
        raise ValueError(f"objective must have length {system.dimension}")
    if direction not in (MIN, MAX):
        raise ValueError(f"direction must be {MIN!r} or {MAX!r}")
    poly.require_feasible()
    a_eq, b_eq = poly.equality_basis
    a_ub, b_ub = system.upper_form()
    kwargs = {"A_ub": a_ub, "b_ub": b_ub} if b_ub.size else {}
    sign = -1.0 if direction == MAX else 1.0
    res = linprog(sign * c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs", **kwargs)
    if res.status == 2:
        raise Infeasible(res.message)
    if res.status == 3:  # pragma: no cover - impossible over the simplex
        raise Unbounded(res.message)
    if res.status != 0:  # pragma: no cover
        raise Infeasible(f"LP failed: {res.message}")
    x = np.clip(res.x, 0.0, None)
    return float(c @ x), x


def sample_point(system: LinearConstraintSystem, seed=None) -> np.ndarray:
    """A point of the credal set, deterministic given ``seed``.

    Uses a Dirichlet-weighted convex combination of the vertices when they can
    be enumerated, otherwise the optimum of a random linear objective.
    """
    rng = np.random.default_rng(seed)
    poly = polytope(system)
    poly.require_feasible()
    try:
        verts = poly.vertices
    except VertexExplosion:
        return lp_optimize(system, rng.normal(size=system.dimension), MAX)[1]
    w = rng.dirichlet(np.ones(len(verts)))
    return w @ verts


def linear_fractional_optimize(
    system: LinearConstraintSystem,
    numerator: tuple[Sequence[float], float],
    denominator: tuple[Sequence[float], float],
    direction: str = MAX,
) -> tuple[float, np.ndarray]:
    """Optimise ``(c.p + c0) / (d.p + d0)`` over the credal set.

    Charnes-Cooper: with ``y = t p`` and ``t = 1 / (d.p + d0)`` the problem is
    the LP over ``(y, t)`` with ``d.y + d0 t = 1`` and the homogenised constraints.
    """
    c, c0 = np.asarray(numerator[0], dtype=float), float(numerator[1])
    d, d0 = np.asarray(denominator[0], dtype=float), float(denominator[1])
    n = system.dimension
    if c.shape != (n,) or d.shape != (n,):
        raise ValueError(f"affine forms must have length {n}")
    low, _ = lp_optimize(system, d, MIN)
    if low + d0 <= DENOMINATOR_TOL:
        raise DenominatorVanishes(f"denominator reaches {low + d0:.3g} on the credal set")
    poly = polytope(system)
    a_eq, b_eq = poly.equality_basis
    a_ub, b_ub = system.upper_form()
    eq = np.vstack([np.hstack([a_eq, -b_eq[:, None]]), np.concatenate([d, [d0]])[None, :]])
    rhs = np.concatenate([np.zeros(len(b_eq)), [1.0]])
    kwargs = {}
    if b_ub.size:
        kwargs = {"A_ub": np.hstack([a_ub, -b_ub[:, None]]), "b_ub": np.zeros(len(b_ub))}
    obj = np.concatenate([c, [c0]])
    sign = -1.0 if direction == MAX else 1.0
    res = linprog(sign * obj, A_eq=eq, b_eq=rhs, bounds=(0, None), method="highs", **kwargs)
    if res.status != 0:  # pragma: no cover - feasible and bounded once the denominator is positive
        raise Infeasible(f"linear-fractional LP failed: {res.message}")
    y, t = res.x[:n], res.x[n]
    p = np.clip(y / t, 0.0, None)
    p = p / p.sum()
    return float((c @ p + c0) / (d @ p + d0)), p


def dump_vertices_csv(vertices: VertexSet | np.ndarray, path) -> None:
    """Debug dump, one vertex per row."""
    verts = vertices.vertices if isinstance(vertices, VertexSet) else np.asarray(vertices)
    header = ",".join(f"p{i}" for i in range(verts.shape[1]))
    np.savetxt(path, verts, delimiter=",", header=header, comments="", fmt="%.12g")


__all__ = [
    "GE", "LE", "MAX", "MIN", "Polytope", "VertexSet", "dump_vertices_csv",
    "independent_rows", "linear_fractional_optimize", "lp_optimize", "phase_one",
    "polytope", "reduce_system", "sample_point", "vertex_enumeration",
]
