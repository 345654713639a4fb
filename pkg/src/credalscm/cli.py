"""Command-line interface.

Subcommands: ``validate``, ``identify``, ``query``, ``counterfactual``, ``bench``.
States are 0-based. Results go to stdout as ``key=value`` records, one per
line; diagnostics go to stderr.

Exit codes: 0 success, 1 other failure, 2 usage error, 3 parse error,
4 model or data validation error, 5 identification error, 6 inference error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence


from . import __version__
from .bench import APPROX, EXACT, BenchConfig, TOPOLOGIES, check_length, default_workers, run_sweep, summarize
from .bench import write_records, write_summary
from .errors import (
    CredalSCMError,
    DataError,
    GeometryError,
    IdentificationError,
    InferenceError,
    ModelError,
    NetworkError,
    ParseError,
)
from .geometry import VertexExplosion, dump_vertices_csv, polytope
from .identification import add_constraints, identify
from .inference import ApproxConfig, CausalQuery, IntervalResult, bounds, counterfactual_bounds
from .io import ModelDocument, dump, expert_rows, load, load_empirical_csv
from .network import compile_network
from .scm import induced_joint, validate_model

log = logging.getLogger("credalscm")

EXIT_OK, EXIT_OTHER, EXIT_USAGE, EXIT_PARSE, EXIT_MODEL, EXIT_IDENT, EXIT_INFER = range(7)
SEED_ENV = "CREDAL_SEED"


class UsageError(Exception):
    pass


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, (ModelError, DataError)):
        return EXIT_MODEL
    if isinstance(exc, IdentificationError):
        return EXIT_IDENT
    if isinstance(exc, (GeometryError, NetworkError, InferenceError)):
        return EXIT_INFER
    return EXIT_OTHER


# -- argument helpers ------------------------------------------------------------

def _assignment(items: Sequence[str] | None, flag: str) -> dict[str, int]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"{flag} expects VAR=STATE, got {item!r}")
        try:
            out[name] = int(value)
        except ValueError:
            raise UsageError(f"{flag}: state must be an integer, got {value!r}") from None
    return out


def _target(spec: str | None, flag: str) -> tuple[str, int | None]:
    if not spec:
        raise UsageError(f"{flag} is required")
    name, sep, value = spec.partition("=")
    if not sep:
        return name, None
    try:
        return name, int(value)
    except ValueError:
        raise UsageError(f"{flag}: state must be an integer, got {value!r}") from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def emit(**fields) -> None:
    print(" ".join(f"{k}={_fmt(v)}" for k, v in fields.items()))


def _seed(args) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    return 0


# -- pipeline ----------------------------------------------------------------------

def _load(args) -> ModelDocument:
    doc = load(args.model)
    if getattr(args, "data", None):
        doc.empirical = load_empirical_csv(args.data, doc.model)
    return doc


def _empirical(doc: ModelDocument):
    if doc.empirical is not None:
        return doc.empirical
    if doc.exogenous_pmfs is not None:
        log.info("no empirical distribution given; using the one induced by exogenous_pmfs")
        return induced_joint(doc.pscm)
    raise DataError("model file has neither an empirical distribution nor exogenous PMFs")


def _identification(doc: ModelDocument, args):
    if doc.identification is not None and not getattr(args, "recompute", False):
        ident = doc.identification
    else:
        ident = identify(doc.model, _empirical(doc), strict=not args.lenient)
    extra = expert_rows(doc)
    if extra:
        ident = ident.with_systems({u: add_constraints(ident[u], rows) for u, rows in extra.items()})
    return ident


def _approx(args) -> ApproxConfig:
    return ApproxConfig(restarts=args.restarts, max_iters=args.max_iters, seed=_seed(args))


def _emit_result(target: str, state: int, res: IntervalResult) -> None:
    emit(target=target, state=state, lower=res.lower, upper=res.upper, width=res.width,
         point=res.point, method=res.method)


# -- subcommands ---------------------------------------------------------------------

def cmd_validate(args) -> int:
    doc = _load(args)
    cls = validate_model(doc.model)
    m = doc.model
    emit(classification=cls, endogenous=len(m.endogenous), exogenous=len(m.exogenous),
         equations=len(m.equations))
    return EXIT_OK


def cmd_identify(args) -> int:
    doc = _load(args)
    ident = _identification(doc, args)
    for u in ident:
        system = ident[u]
        try:
            n_vert = len(polytope(system).vertices)
        except VertexExplosion:
            n_vert = -1
        d = ident.diagnostics.get(u, {})
        emit(exogenous=u, dimension=system.dimension, constraints=len(system.eq_rhs) + len(system.ineq_rhs),
             rank=len(polytope(system).equality_basis[1]), vertices=n_vert, skipped=d.get("skipped", 0))
        if args.vertices_dir:
            Path(args.vertices_dir).mkdir(parents=True, exist_ok=True)
            dump_vertices_csv(polytope(system).vertices, Path(args.vertices_dir) / f"{u}.csv")
    if args.output:
        doc.identification = ident
        dump(doc, args.output)
        log.info("wrote %s", args.output)
    return EXIT_OK


def cmd_query(args) -> int:
    doc = _load(args)
    block = doc.query or {}
    do = _assignment(args.do, "--do") if args.do else {k: int(v) for k, v in block.get("interventions", {}).items()}
    ev = _assignment(args.evidence, "--evidence") if args.evidence else {
        k: int(v) for k, v in block.get("evidence", {}).items()}
    if args.target:
        target, state = _target(args.target, "--target")
    elif "target" in block:
        target, state = block["target"], block.get("target_state")
    else:
        raise UsageError("--target is required")
    if target not in doc.model.variables:
        raise UsageError(f"unknown target {target!r}")
    try:
        CausalQuery(target, 0, do, ev)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cn = compile_network(doc.model, _identification(doc, args))
    states = [state] if state is not None else range(doc.model.card(target))
    for s in states:
        _emit_result(target, s, bounds(cn, CausalQuery(target, s, do, ev), args.method, _approx(args)))
    return EXIT_OK


def cmd_counterfactual(args) -> int:
    doc = _load(args)
    block = doc.counterfactual or {}
    observed = _assignment(args.observed, "--observed") if args.observed else {
        k: int(v) for k, v in block.get("observed", {}).items()}
    hypothetical = _assignment(args.do_prime, "--do-prime") if args.do_prime else {
        k.rstrip("'"): int(v) for k, v in block.get("hypothetical", {}).items()}
    hypothetical = {k.rstrip("'"): v for k, v in hypothetical.items()}
    if args.target_prime:
        target, state = _target(args.target_prime, "--target-prime")
    elif "target" in block:
        target, state = block["target"], block.get("target_state")
    else:
        raise UsageError("--target-prime is required")
    target = target.rstrip("'")
    for v in [target, *observed, *hypothetical]:
        if v not in doc.model.variables:
            raise UsageError(f"unknown variable {v!r}")
    if target in hypothetical:
        raise UsageError(f"target {target!r} is intervened in the hypothetical world")
    cn = compile_network(doc.model, _identification(doc, args))
    states = [state] if state is not None else range(doc.model.card(target))
    for s in states:
        res = counterfactual_bounds(cn, observed, hypothetical, target, s, args.method, _approx(args))
        _emit_result(target + "'", s, res)
    return EXIT_OK


def cmd_bench(args) -> int:
    lengths = args.lengths or [6]
    methods = (EXACT, APPROX) if args.method == "both" else (args.method,)
    for l in lengths:
        try:
            check_length(args.topology, l)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    approx = ApproxConfig(restarts=args.restarts, max_iters=args.max_iters)
    configs = [
        BenchConfig(args.topology, l, args.iterations, methods=methods, timeout=args.timeout,
                    seed=_seed(args), approx=approx, exo_cardinality=args.exo_cardinality)
        for l in lengths
    ]
    workers = args.workers or default_workers()
    records = run_sweep(configs, workers)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / "records.csv")
    rows = summarize(records)
    write_summary(rows, out / "summary.csv")
    for r in rows:
        emit(**{k: r[k] for k in ("topology", "length", "method", "completed", "mean_runtime",
                                  "mean_width", "rmse", "timeout_rate")})
    if not args.no_plots:
        from .plotting import render_summary

        for p in render_summary(rows, out):
            log.info("wrote %s", p)
    log.info("wrote %s and %s", out / "records.csv", out / "summary.csv")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, inference: bool = True) -> None:
    p.add_argument("--config", help="JSON file whose keys set default values of these options")
    p.add_argument("--seed", type=int, default=None, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    if inference:
        p.add_argument("--method", choices=(EXACT, APPROX), default=EXACT)
        p.add_argument("--restarts", type=int, default=10, help="restarts of the approximate method")
        p.add_argument("--max-iters", type=int, default=100, help="sweeps per restart of the approximate method")
        p.add_argument("--timeout", type=float, default=None, help="accepted for symmetry; unused outside bench")
        p.add_argument("--workers", type=int, default=None, help="only used by bench")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("model", help="JSON model file")
    p.add_argument("--data", help="CSV of complete records replacing the file's empirical distribution")
    p.add_argument("--lenient", action="store_true",
                   help="accept zero cells in the empirical distribution (drop undefined constraints)")
    p.add_argument("--recompute", action="store_true", help="ignore a stored identification block")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="credalscm", description="Causal and counterfactual bounds via credal networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check a model file and print its class")
    p.add_argument("model")
    p.add_argument("--data", help=argparse.SUPPRESS)
    _common(p, inference=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("identify", help="build the credal sets of the exogenous variables")
    _model_args(p)
    p.add_argument("--output", help="write the model file with the identification block added")
    p.add_argument("--vertices-dir", help="write one CSV of vertices per exogenous variable")
    _common(p, inference=False)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("query", help="bounds on P(target | do(...), evidence)")
    _model_args(p)
    p.add_argument("--do", action="append", metavar="X=i", help="intervention (repeatable)")
    p.add_argument("--evidence", action="append", metavar="Y=j", help="observation (repeatable)")
    p.add_argument("--target", metavar="Z[=k]", help="target variable, optionally with one state")
    _common(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("counterfactual", help="bounds on a twin-network query")
    _model_args(p)
    p.add_argument("--observed", action="append", metavar="Y=j", help="factual observation (repeatable)")
    p.add_argument("--do-prime", action="append", metavar="X=i", help="hypothetical intervention (repeatable)")
    p.add_argument("--target-prime", metavar="Z[=k]", help="hypothetical-world target")
    _common(p)
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("bench", help="benchmark on random models; writes CSV files and figures")
    p.add_argument("--topology", choices=TOPOLOGIES, default="tree")
    p.add_argument("--length", "--lengths", dest="lengths", type=int, nargs="+", metavar="L")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--exo-cardinality", type=int, default=6)
    p.add_argument("--output", default="bench-out", help="output directory")
    p.add_argument("--no-plots", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_bench, method="both", timeout=300.0)
    for action in p._actions:
        if action.dest == "method":
            action.choices = (EXACT, APPROX, "both")
    return parser


def _explicit(parser: argparse.ArgumentParser, argv: Sequence[str]) -> set[str]:
    """Destinations set on the command line, found by re-parsing with every default suppressed."""
    parsers = [parser, *parser._subparsers._group_actions[0].choices.values()]
    saved = [(a, a.default) for p in parsers for a in p._actions]
    saved_p = [(p, dict(p._defaults)) for p in parsers]
    try:
        for a, _ in saved:
            a.default = argparse.SUPPRESS
        for p in parsers:
            p._defaults = {k: v for k, v in p._defaults.items() if k in ("func",)}
        return set(vars(parser.parse_args(argv)))
    finally:
        for a, d in saved:
            a.default = d
        for p, d in saved_p:
            p._defaults = d


def _apply_defaults(parser: argparse.ArgumentParser, args, argv: Sequence[str] = ()) -> argparse.Namespace:
    """Fill options not given on the command line from --config, then from the model file's options."""
    layers = []
    if getattr(args, "config", None):
        try:
            layers.append((json.loads(Path(args.config).read_text(encoding="utf-8")), True))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
    model = getattr(args, "model", None)
    if model and Path(model).is_file():
        try:
            layers.append((json.loads(Path(model).read_text(encoding="utf-8")).get("options", {}), False))
        except (json.JSONDecodeError, AttributeError):
            pass  # reported properly when the model is loaded
    if not layers:
        return args
    given = _explicit(parser, argv)
    for layer, strict in layers:
        if not isinstance(layer, dict):
            raise ParseError("config must be a JSON object")
        for key, value in layer.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                if strict:
                    raise UsageError(f"unknown option {key!r} in config")
                continue
            if dest not in given:
                setattr(args, dest, value)
                given.add(dest)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        args = _apply_defaults(parser, args, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CredalSCMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except KeyboardInterrupt:  # pragma: no cover
        return EXIT_OTHER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
