"""Benchmark on random stationary quasi-Markovian models.

Topologies (endogenous arcs, then confounders; every exogenous variable has at
most two children):

* ``tree``: chain X1 -> ... -> Xl; confounders over (X1, X2), (X3, X4), ...;
  with odd l the last variable gets its own exogenous parent.
* ``polytree``: chain over the odd variables X1 -> X3 -> X5 -> ...; each even
  X2j points into X2j-1; confounders over (X1, X3), (X5, X7), ...; every even
  variable has its own exogenous parent. Requires l divisible by 4. For
  l <= 8 the query target is X2, a root whose only child X1 is intervened,
  so the query reduces to the identified marginal P(X2) and bounds are points.
* ``multiply_connected``: chains over odd and over even variables plus
  X2j-1 -> X2j; confounders over (X1, X3), (X5, X7), ... and (X2, X4),
  (X6, X8), .... Requires l divisible by 2 (and 4 for complete pairs).

Stationarity: equations are drawn once per structural role, i.e. per
confounder shape (which parents each child has, inside or outside the pair),
and reused at every position of that shape.

Per-iteration seeds are spawned from the master seed, so the records do not
depend on the number of workers.
"""

from __future__ import annotations

import csv
import math
import os
import signal
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .errors import CredalSCMError, EmptyRecords, ModelError
from .identification import identify_quasi_markovian
from .inference import APPROX, EXACT, ApproxConfig, CausalQuery, PSCMMarginals, bounds
from .models import random_table, support_complete
from .network import compile_network
from .scm import ENDOGENOUS, EXOGENOUS, CausalModel, ProbabilisticSCM, StructuralEquation, Variable, induced_joint

TREE, POLYTREE, MULTIPLY_CONNECTED = "tree", "polytree", "multiply_connected"
TOPOLOGIES = (TREE, POLYTREE, MULTIPLY_CONNECTED)
MAX_RESAMPLES = 50
TEMPLATE_TRIES = 10_000
# above this many joint exogenous states the empirical joint is not tabulated
JOINT_ENUMERATION_LIMIT = 2_000_000


@dataclass(frozen=True)
class BenchConfig:
    topology: str = TREE
    length: int = 6
    iterations: int = 100
    endo_cardinality: int = 2
    exo_cardinality: int = 6
    methods: tuple[str, ...] = (EXACT, APPROX)
    timeout: float = 300.0
    seed: int = 0
    approx: ApproxConfig = field(default_factory=ApproxConfig)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        check_length(self.topology, self.length)
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        for m in self.methods:
            if m not in (EXACT, APPROX):
                raise ValueError(f"unknown method {m!r}")


def check_length(topology: str, length: int) -> None:
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}; choose from {', '.join(TOPOLOGIES)}")
    if topology == TREE and length < 3:
        raise ValueError("trees need length >= 3")
    if topology == POLYTREE and (length < 4 or length % 4):
        raise ValueError("polytree length must be a positive multiple of 4")
    if topology == MULTIPLY_CONNECTED and (length < 4 or length % 2):
        raise ValueError("multiply connected length must be an even number >= 4")


@dataclass
class BenchRecord:
    topology: str
    length: int
    iteration: int
    method: str
    runtime: float
    width: float
    lower: float
    upper: float
    timed_out: bool
    resamples: int = 0
    error: str = ""


RECORD_FIELDS = [f.name for f in fields(BenchRecord)]


# -- structure ---------------------------------------------------------------------

def structure(topology: str, length: int) -> tuple[dict[str, list[str]], list[list[str]]]:
    """Endogenous parents of each ``X1..Xl`` and the children of each exogenous variable."""
    check_length(topology, length)
    x = [f"X{i}" for i in range(1, length + 1)]
    parents: dict[str, list[str]] = {v: [] for v in x}
    groups: list[list[str]] = []
    if topology == TREE:
        for i in range(1, length):
            parents[x[i]].append(x[i - 1])
        groups = [x[i:i + 2] for i in range(0, length, 2)]
    elif topology == POLYTREE:
        odd = x[0::2]
        for a, b in zip(odd, odd[1:]):
            parents[b].append(a)
        for j in range(0, length, 2):
            parents[x[j]].append(x[j + 1])
        groups = [odd[i:i + 2] for i in range(0, len(odd), 2)] + [[v] for v in x[1::2]]
    else:
        odd, even = x[0::2], x[1::2]
        for chain in (odd, even):
            for a, b in zip(chain, chain[1:]):
                parents[b].append(a)
        for a, b in zip(odd, even):
            parents[b].append(a)
        groups = [odd[i:i + 2] for i in range(0, len(odd), 2)] + [even[i:i + 2] for i in range(0, len(even), 2)]
    return parents, groups


def role(children: Sequence[str], parents: dict[str, list[str]]) -> tuple:
    """Shape of a confounder: for each child, which of its parents sit inside the pair."""
    return tuple(
        tuple(children.index(p) if p in children else -1 for p in parents[c]) for c in children
    )


def query_for(topology: str, length: int) -> CausalQuery:
    """The unidentifiable benchmark query; a target that would coincide with X1 moves to X2."""
    if topology == TREE:
        target, observed = math.ceil(length / 2), length
    elif topology == POLYTREE:
        target, observed = math.ceil(length / 4), length - 1
    else:
        target, observed = math.ceil(length / 4), length
    if target == 1:
        target = 2
    return CausalQuery(f"X{target}", 0, {"X1": 0}, {f"X{observed}": 0})


def _local_model(children, parents, u, card, tables) -> CausalModel:
    outside = []
    for c in children:
        outside += [p for p in parents[c] if p not in children and p not in outside]
    variables = [Variable(v, ENDOGENOUS, 2) for v in list(children) + outside] + [Variable(u, EXOGENOUS, card)]
    eqs = [StructuralEquation(c, parents[c] + [u], t) for c, t in zip(children, tables)]
    eqs += [StructuralEquation(p, [], 0) for p in outside]
    return CausalModel(variables, eqs)


def _draw_template(rng, children, parents, config: BenchConfig) -> list[np.ndarray]:
    """Surjective tables for one confounder shape, redrawn until every configuration is reachable."""
    card = config.exo_cardinality
    for _ in range(TEMPLATE_TRIES):
        tables = [
            random_table(rng, config.endo_cardinality, [config.endo_cardinality] * len(parents[c]) + [card])
            for c in children
        ]
        local = _local_model(children, {c: parents[c] for c in children}, "U", card, tables)
        if config.endo_cardinality != 2 or support_complete(local, "U"):
            return tables
    raise ModelError(f"no positive template found for shape {role(children, parents)}")


def _generate(config: BenchConfig, seed) -> tuple[ProbabilisticSCM, int]:
    rng = np.random.default_rng(seed)
    parents, groups = structure(config.topology, config.length)
    for resamples in range(MAX_RESAMPLES + 1):
        templates: dict[tuple, list[np.ndarray]] = {}
        variables = [Variable(x, ENDOGENOUS, config.endo_cardinality) for x in parents]
        equations = []
        for children in groups:
            key = role(children, parents)
            if key not in templates:
                templates[key] = _draw_template(rng, children, parents, config)
            u = "U" + children[0][1:]
            variables.append(Variable(u, EXOGENOUS, config.exo_cardinality))
            equations += [StructuralEquation(c, parents[c] + [u], t) for c, t in zip(children, templates[key])]
        model = CausalModel(variables, equations)
        if all(support_complete(model, u) for u in model.exogenous):
            break
    else:  # pragma: no cover - templates are already checked locally
        raise ModelError("could not draw a model with a strictly positive joint")
    pmfs = {u: rng.dirichlet(np.ones(config.exo_cardinality)) for u in model.exogenous}
    return ProbabilisticSCM(model, pmfs), resamples


def generate_model(config: BenchConfig, iteration_seed) -> ProbabilisticSCM:
    return _generate(config, iteration_seed)[0]


def iteration_seeds(seed: int, iterations: int) -> list[np.random.SeedSequence]:
    """Child seed sequence ``i`` drives iteration ``i``."""
    return np.random.SeedSequence(seed).spawn(iterations)


def empirical_for(pscm: ProbabilisticSCM):
    """Tabulated joint when small enough, otherwise marginals on demand."""
    n_joint = math.prod(pscm.model.card(u) for u in pscm.model.exogenous)
    if n_joint <= JOINT_ENUMERATION_LIMIT and len(pscm.model.endogenous) <= 20:
        return induced_joint(pscm)
    return PSCMMarginals(pscm)


# -- running ---------------------------------------------------------------------------

class _Timeout(Exception):
    pass


@contextmanager
def _time_limit(seconds: float):
    """SIGALRM-based limit; a no-op where alarms are unavailable (non-main threads, Windows)."""
    usable = seconds and seconds > 0 and hasattr(signal, "setitimer")
    if usable:
        try:
            def handler(signum, frame):
                raise _Timeout()
            previous = signal.signal(signal.SIGALRM, handler)
        except ValueError:
            usable = False
    if not usable:
        yield
        return
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, previous)


def run_iteration(config: BenchConfig, iteration: int, seed) -> list[BenchRecord]:
    pscm, resamples = _generate(config, seed)
    query = query_for(config.topology, config.length)
    base = dict(topology=config.topology, length=config.length, iteration=iteration, resamples=resamples)
    try:
        ident = identify_quasi_markovian(pscm.model, empirical_for(pscm))
        cn = compile_network(pscm.model, ident)
    except CredalSCMError as exc:
        return [BenchRecord(method=m, runtime=0.0, width=math.nan, lower=math.nan, upper=math.nan,
                            timed_out=False, error=type(exc).__name__, **base) for m in config.methods]
    records = []
    for method in config.methods:
        start = time.perf_counter()
        lower = upper = math.nan
        timed_out, error = False, ""
        try:
            with _time_limit(config.timeout):
                res = bounds(cn, query, method, config.approx)
            lower, upper = res.lower, res.upper
        except _Timeout:
            timed_out = True
        except CredalSCMError as exc:
            error = type(exc).__name__
        runtime = time.perf_counter() - start
        records.append(BenchRecord(method=method, runtime=runtime, width=upper - lower, lower=lower,
                                   upper=upper, timed_out=timed_out, error=error, **base))
    return records


def _run_one(args):
    return run_iteration(*args)


def run_benchmark(config: BenchConfig, workers: int = 1) -> list[BenchRecord]:
    """One record per iteration and method, ordered by iteration then method."""
    jobs = [(config, i, s) for i, s in enumerate(iteration_seeds(config.seed, config.iterations))]
    if workers <= 1 or len(jobs) <= 1:
        chunks = map(_run_one, jobs)
        return [r for chunk in chunks for r in chunk]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for chunk in pool.map(_run_one, jobs) for r in chunk]


def run_sweep(configs: Iterable[BenchConfig], workers: int = 1) -> list[BenchRecord]:
    out = []
    for config in configs:
        out.extend(run_benchmark(config, workers))
    return out


# -- summaries ---------------------------------------------------------------------------

SUMMARY_FIELDS = ["topology", "length", "method", "n", "completed", "mean_runtime", "mean_width",
                  "timeout_rate", "rmse", "rmse_pairs", "containment_violations"]


def _ok(r: BenchRecord) -> bool:
    return not r.timed_out and not r.error and not math.isnan(r.lower)


def summarize(records: Sequence[BenchRecord], containment_tol: float = 1e-6) -> list[dict]:
    """Per (topology, length, method) statistics.

    ``rmse`` compares approximate with exact endpoints over iterations where
    both completed, pooling lower and upper endpoints; it is reported on the
    approximate rows.
    """
    if not records:
        raise EmptyRecords("no benchmark records to summarise")
    keys = []
    for r in records:
        k = (r.topology, r.length, r.method)
        if k not in keys:
            keys.append(k)
    by_iter = {(r.topology, r.length, r.method, r.iteration): r for r in records}
    rows = []
    for topo, length, method in keys:
        group = [r for r in records if (r.topology, r.length, r.method) == (topo, length, method)]
        done = [r for r in group if _ok(r)]
        row = {
            "topology": topo, "length": length, "method": method, "n": len(group), "completed": len(done),
            "mean_runtime": float(np.mean([r.runtime for r in group])),
            "mean_width": float(np.mean([r.width for r in done])) if done else math.nan,
            "timeout_rate": sum(r.timed_out for r in group) / len(group),
            "rmse": math.nan, "rmse_pairs": 0, "containment_violations": 0,
        }
        if method == APPROX:
            diffs, violations = [], 0
            for r in done:
                e = by_iter.get((topo, length, EXACT, r.iteration))
                if e is None or not _ok(e):
                    continue
                diffs += [r.lower - e.lower, r.upper - e.upper]
                if r.lower < e.lower - containment_tol or r.upper > e.upper + containment_tol:
                    violations += 1
            if diffs:
                row["rmse"] = float(np.sqrt(np.mean(np.square(diffs))))
            row["rmse_pairs"] = len(diffs) // 2
            row["containment_violations"] = violations
        rows.append(row)
    return rows


def write_records(records: Sequence[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


def write_summary(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        w.writerows(rows)


def read_records(path) -> list[BenchRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(BenchRecord(
                topology=row["topology"], length=int(row["length"]), iteration=int(row["iteration"]),
                method=row["method"], runtime=float(row["runtime"]), width=float(row["width"]),
                lower=float(row["lower"]), upper=float(row["upper"]),
                timed_out=row["timed_out"] == "True", resamples=int(row["resamples"]), error=row["error"],
            ))
    return out


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


__all__ = [
    "BenchConfig", "BenchRecord", "MULTIPLY_CONNECTED", "POLYTREE", "TOPOLOGIES", "TREE",
    "check_length", "generate_model", "query_for", "read_records", "run_benchmark", "run_iteration",
    "run_sweep", "structure", "summarize", "write_records", "write_summary",
]
