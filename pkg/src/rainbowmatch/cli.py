"""Command-line interface: generate, solve, verify, simulate, reduce.

Exit status is 0 on success, 1 when no full matching was found or a
matching is rejected, and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys

import numpy as np

from . import io
from .baseline import solve_exact_max, solve_greedy
from .generators import FAMILIES, GeneratorSpec, InfeasibleSpec, RetryExhausted, generate
from .graph import GraphError, normalize_cliques, verify_matching
from .nibble import (
    AlgorithmBroke, BadEpsilon, HypothesisViolation, NibbleConfig, ReductionAuditFailed,
    audit_reduction, reduce_theorem1, run_nibble, solve_theorem1,
)
from .trajectory import collision_check, deviation_series, recurrence_check

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        io.write_text(path, text)


def _load(path: str):
    return io.parse_instance(io.read_text(path))


def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        family=args.family, n=args.n, delta=args.delta, sigma1=args.sigma1, sigma2=args.sigma2,
        seed=args.seed, max_multiplicity=args.max_multiplicity,
    )
    _emit(args.output, io.serialize_instance(generate(spec)))
    return EXIT_OK


def _nibble_config(args, **over) -> NibbleConfig:
    kw = dict(epsilon=args.epsilon, seed=args.seed, max_retries=args.max_retries)
    if args.sigma1 is not None:
        kw["sigma1"] = args.sigma1
    if args.sigma2 is not None:
        kw["sigma2"] = args.sigma2
    kw.update(over)
    return NibbleConfig(**kw)


def cmd_solve(args) -> int:
    g = _load(args.input)
    trace = None
    if args.algorithm == "exact":
        out = solve_exact_max(g, budget=args.budget)
    elif args.algorithm == "greedy":
        out = solve_greedy(g)
    elif args.algorithm == "nibble":
        if not g.is_normalized():
            if args.delta is None:
                raise GraphError("nibble needs cliques of size 2 or 3; pass --delta to normalize")
            g = normalize_cliques(g, args.delta)
        out, trace = run_nibble(g, _nibble_config(args))
    else:
        if args.delta is None:
            raise GraphError("thm1 needs --delta")
        out, trace = solve_theorem1(g, args.delta, _nibble_config(args))

    verdict = verify_matching(g, out.matching, require_full=False)
    if not verdict:
        raise AssertionError(f"solver produced an invalid matching: {verdict.violations[:3]}")
    if args.output:
        _emit(args.output, io.serialize_matching(out.matching))
    if args.trace and trace is not None:
        io.write_text(args.trace, io.serialize_trace(trace, per_colour=args.trace_colours))
    detail = f" reason={out.reason} iteration={out.iteration}" if out.reason else ""
    print(f"{args.algorithm}: {out.status.value} size={out.max_size}/{g.n_colours} "
          f"attempts={out.attempts}{detail}", file=sys.stderr)
    return EXIT_OK if out.found else EXIT_FAIL


def cmd_verify(args) -> int:
    g = _load(args.input)
    m = io.parse_matching(io.read_text(args.matching))
    verdict = verify_matching(g, m, require_full=args.full)
    if verdict:
        print(f"accepted: {len(m)} edges", file=sys.stderr)
        return EXIT_OK
    shown = 10
    for v in verdict.violations[:shown]:
        print(f"rejected: {v}", file=sys.stderr)
    if len(verdict.violations) > shown:
        print(f"rejected: ... and {len(verdict.violations) - shown} more", file=sys.stderr)
    return EXIT_FAIL


def cmd_simulate(args) -> int:
    g = _load(args.input)
    if not g.is_normalized():
        raise GraphError("simulate needs cliques of size 2 or 3")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "status", "attempts", "worst_rel_dev", "bookkeeping_ok",
                "max_phi_ratio", "min_t3", "min_t5"])
    found = 0
    for t in range(args.trials):
        seed = args.seed + t
        out, trace = run_nibble(g, _nibble_config(args, seed=seed))
        found += out.found
        ds = deviation_series(trace)
        ratio = collision_check(trace).ratio
        rc = recurrence_check(trace)
        w.writerow([seed, out.status.value, out.attempts, repr(ds.worst_relative), int(ds.consistent),
                    repr(float(ratio.max()) if len(ratio) else 0.0), repr(rc.min_t3), repr(rc.min_t5)])
    _emit(args.output, buf.getvalue())
    print(f"simulate: {found}/{args.trials} runs found a full matching", file=sys.stderr)
    return EXIT_OK


def cmd_reduce(args) -> int:
    g = _load(args.input)
    base = normalize_cliques(g, args.delta)
    h = reduce_theorem1(base, np.random.default_rng(args.seed))
    ok = audit_reduction(h, args.delta)
    _emit(args.output, io.serialize_instance(h))
    print(f"reduce: audit {'passed' if ok else 'failed'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rainbowmatch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write an instance from one of the families")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int, default=0, help="colour count (order k for latin_addition)")
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma1", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--max-multiplicity", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    def nibble_flags(q):
        q.add_argument("--epsilon", type=float)
        q.add_argument("--sigma1", type=float)
        q.add_argument("--sigma2", type=float)
        q.add_argument("--delta", type=float)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--max-retries", type=int, default=3)

    p = sub.add_parser("solve", help="find a rainbow matching")
    p.add_argument("--algorithm", required=True, choices=("exact", "greedy", "nibble", "thm1"))
    p.add_argument("--in", dest="input", required=True)
    nibble_flags(p)
    p.add_argument("--budget", type=int, default=10**7, help="node cap for the exact solver")
    p.add_argument("-o", "--output")
    p.add_argument("--trace", help="CSV trace path (nibble and thm1)")
    p.add_argument("--trace-colours", action="store_true", help="add per-colour edge counts")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a matching against an instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--matching", required=True)
    p.add_argument("--full", action="store_true", help="require every colour")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="seeded nibble ensemble with trajectory reports")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--trials", type=int, default=10)
    nibble_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduce", help="normalize and thin triangles (no solving)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (GraphError, io.ParseError, InfeasibleSpec, RetryExhausted, BadEpsilon,
            HypothesisViolation, ReductionAuditFailed, AlgorithmBroke, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
