"""H-representation of a credal set over one exogenous variable."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

LE, GE, EQ = "<=", ">=", "="
RELATIONS = (LE, GE, EQ)


def _frozen(a, shape) -> np.ndarray:
    a = np.array(a, dtype=float).reshape(shape)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearConstraintSystem:
    """Linear constraints on a PMF of length ``dimension``.

    Non-negativity and normalisation are implicit and never stored as rows.
    Inequalities keep their relation so they serialise as written.
    """

    dimension: int
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ineq_matrix: np.ndarray = None
    ineq_rhs: np.ndarray = None
    ineq_relations: tuple[str, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.dimension)
        if n < 1:
            raise DataError("dimension must be positive")
        object.__setattr__(self, "dimension", n)
        eq_rhs = np.ravel(np.asarray(self.eq_rhs, dtype=float))
        object.__setattr__(self, "eq_matrix", _frozen(self.eq_matrix, (eq_rhs.size, n)))
        object.__setattr__(self, "eq_rhs", _frozen(eq_rhs, (eq_rhs.size,)))
        if self.ineq_matrix is None:
            ineq_rhs = np.zeros(0)
            ineq_matrix = np.zeros((0, n))
        else:
            ineq_rhs = np.ravel(np.asarray(self.ineq_rhs, dtype=float))
            ineq_matrix = self.ineq_matrix
        object.__setattr__(self, "ineq_matrix", _frozen(ineq_matrix, (ineq_rhs.size, n)))
        object.__setattr__(self, "ineq_rhs", _frozen(ineq_rhs, (ineq_rhs.size,)))
        rel = tuple(self.ineq_relations)
        if len(rel) != ineq_rhs.size or any(r not in (LE, GE) for r in rel):
            raise DataError("one relation ('<=' or '>=') per inequality required")
        object.__setattr__(self, "ineq_relations", rel)
        if not (np.all(np.isfinite(self.eq_rhs)) and np.all(np.isfinite(self.ineq_rhs))):
            raise DataError("constraint right-hand sides must be finite")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        dimension: int,
        equalities: Iterable[tuple[Sequence[float], float]] = (),
        inequalities: Iterable[tuple[Sequence[float], str, float]] = (),
    ) -> "LinearConstraintSystem":
        eqs = list(equalities)
        ineqs = list(inequalities)
        return cls(
            dimension,
            [c for c, _ in eqs] if eqs else np.zeros((0, dimension)),
            [b for _, b in eqs],
            [c for c, _, _ in ineqs] if ineqs else None,
            [b for _, _, b in ineqs] if ineqs else None,
            tuple(r for _, r, _ in ineqs),
        )

    @classmethod
    def singleton(cls, pmf: Sequence[float]) -> "LinearConstraintSystem":
        """System whose only solution is ``pmf``."""
        pmf = np.asarray(pmf, dtype=float)
        return cls(pmf.size, np.eye(pmf.size), pmf)

    @classmethod
    def unconstrained(cls, dimension: int) -> "LinearConstraintSystem":
        return cls(dimension, np.zeros((0, dimension)), [])

    # -- views -------------------------------------------------------------

    @property
    def equalities(self) -> list[tuple[np.ndarray, float]]:
        return [(row, float(b)) for row, b in zip(self.eq_matrix, self.eq_rhs)]

    @property
    def inequalities(self) -> list[tuple[np.ndarray, str, float]]:
        return [
            (row, r, float(b))
            for row, r, b in zip(self.ineq_matrix, self.ineq_relations, self.ineq_rhs)
        ]

    def upper_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Inequalities rewritten as ``A p <= b``."""
        sign = np.array([1.0 if r == LE else -1.0 for r in self.ineq_relations])
        return self.ineq_matrix * sign[:, None], self.ineq_rhs * sign

    def residual(self, p: Sequence[float]) -> float:
        """Largest violation of any constraint, simplex conditions included."""
        p = np.asarray(p, dtype=float)
        worst = max(0.0, float(-p.min()), abs(float(p.sum()) - 1.0))
        if self.eq_rhs.size:
            worst = max(worst, float(np.max(np.abs(self.eq_matrix @ p - self.eq_rhs))))
        if self.ineq_rhs.size:
            a, b = self.upper_form()
            worst = max(worst, float(np.max(a @ p - b)))
        return worst

    def contains(self, p: Sequence[float], tol: float = 1e-8) -> bool:
        return len(p) == self.dimension and self.residual(p) <= tol

    def with_constraints(
        self,
        equalities: Iterable[tuple[Sequence[float], float]] = (),
        inequalities: Iterable[tuple[Sequence[float], str, float]] = (),
    ) -> "LinearConstraintSystem":
        eqs = self.equalities + [(np.asarray(c, float), float(b)) for c, b in equalities]
        ineqs = self.inequalities + [(np.asarray(c, float), r, float(b)) for c, r, b in inequalities]
        return LinearConstraintSystem.from_rows(self.dimension, eqs, ineqs)

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "equalities": [
                {"coefficients": row.tolist(), "rhs": float(b)} for row, b in self.equalities
            ],
            "inequalities": [
                {"coefficients": row.tolist(), "relation": r, "rhs": float(b)}
                for row, r, b in self.inequalities
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearConstraintSystem":
        try:
            return cls.from_rows(
                int(d["dimension"]),
                [(e["coefficients"], e["rhs"]) for e in d.get("equalities", [])],
                [(e["coefficients"], e["relation"], e["rhs"]) for e in d.get("inequalities", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed constraint system: {exc}") from exc

    def __repr__(self):
        return (
            f"LinearConstraintSystem(dimension={self.dimension}, "
            f"equalities={len(self.eq_rhs)}, inequalities={len(self.ineq_rhs)})"
        )
