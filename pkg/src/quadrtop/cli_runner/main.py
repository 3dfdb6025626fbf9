"""Command line interface."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..char_classes import StratumResolutionError
from .corpus import CorpusEntry, by_name, corpus, quadric_expectation
from .oracle import oracle_b0
from .problem import ProblemSpec, SchemaError, parse_problem, quadric_problem
from .runner import prepare_mesh, run_analyze, w_top_for

log = logging.getLogger("quadrtop")


def _add_input(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="problem file (JSON or TOML)")
    src.add_argument("--quadric", help="single quadric of signature a,b in P^n, given as a,b,n")
    src.add_argument("--example", help="built-in corpus entry by name")
    p.add_argument("--mesh-depth", type=int)
    p.add_argument("--max-refine", type=int)
    p.add_argument("--gap-floor", type=float)
    p.add_argument("--seed", type=int)


def load_spec(args) -> ProblemSpec:
    if args.input:
        spec = parse_problem(args.input)
    elif args.quadric:
        a, b, n = (int(x) for x in args.quadric.split(","))
        spec = quadric_problem(a, b, n)
    else:
        spec = by_name(args.example).spec
    for opt, key in (("mesh_depth", "mesh_depth"), ("max_refine", "max_extra_depth"),
                     ("gap_floor", "gap_floor"), ("seed", "seed")):
        val = getattr(args, opt, None)
        if val is not None:
            spec.options[key] = val
    return spec


def _emit(obj: dict, fmt: str = "json", md: str | None = None) -> None:
    if fmt == "md" and md is not None:
        sys.stdout.write(md)
    else:
        sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_analyze(args) -> int:
    rep = run_analyze(load_spec(args), normal=_normal(args), timings=args.timings)
    _emit(rep.to_json(), args.emit, rep.markdown())
    return 0


def cmd_betti(args) -> int:
    rep = run_analyze(load_spec(args))
    _emit(rep.betti.to_json())
    return 0


def cmd_inclusion(args) -> int:
    rep = run_analyze(load_spec(args))
    _emit({"inclusion_rank": rep.inclusion, "exact": rep.exact})
    return 0


def _normal(args):
    text = getattr(args, "normal", None)
    return None if text is None else [x.strip() for x in text.split(",")]


def cmd_hyperplane(args) -> int:
    rep = run_analyze(load_spec(args), normal=_normal(args))
    _emit(rep.g2, args.emit, rep.markdown())
    return 0


def cmd_oracle(args) -> int:
    spec = load_spec(args)
    res = oracle_b0(spec, args.samples, args.eps, seed=int(spec.options["seed"]))
    _emit(res.to_json())
    return 0


def cmd_mesh_dump(args) -> int:
    sys.stdout.write(prepare_mesh(load_spec(args)).dumps() + "\n")
    return 0


def check_entry(entry, seed: int = 0) -> dict:
    """Run one corpus entry and compare against its known answers."""
    spec = entry.spec
    spec.options["seed"] = seed
    out = {"name": spec.name, "checks": {}}
    try:
        rep = run_analyze(spec)
    except (StratumResolutionError, SchemaError, ValueError, RuntimeError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["pass"] = False
        return out
    out["betti"] = rep.betti.betti
    out["inclusion_rank"] = rep.inclusion
    out["exact"] = rep.exact
    out["E"] = {str(r): g for r, g in sorted(rep.table.pages.items())}
    checks = out["checks"]
    checks["exact"] = rep.exact
    if entry.betti is not None:
        checks["betti"] = rep.betti.betti == entry.betti
    if entry.inclusion is not None:
        checks["inclusion_rank"] = rep.inclusion == entry.inclusion
    if entry.empty is not None:
        checks["empty_certified"] = rep.betti.empty_certified == entry.empty
    if entry.w_top is not None:
        w = w_top_for(spec, rep.mesh)
        out["w_top"] = w
        checks["w_top"] = w == entry.w_top
    checks["low_degree_consistent"] = rep.betti.low_degree_consistent
    out["pass"] = all(checks.values())
    return out


def cmd_corpus(args) -> int:
    entries = corpus()
    if args.quadric_sweep:
        for n in range(1, 8):
            for a in range(1, n + 2):
                for b in range(a, n + 2 - a):
                    betti, incl = quadric_expectation(a, b, n)
                    entries.append(CorpusEntry(quadric_problem(a, b, n), betti=betti, inclusion=incl, empty=False))
    results = [check_entry(e, args.seed) for e in entries]
    ok = all(r["pass"] for r in results)
    _emit({"seed": args.seed, "all_pass": ok, "results": results})
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadrtop", description="Z2 homology of sets cut out by quadratic inequalities")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full report: pages, Betti numbers, inclusion ranks")
    _add_input(p)
    p.add_argument("--emit", choices=["json", "md"], default="json")
    p.add_argument("--normal", help="also compute the hyperplane table for V = {h = 0}, h given as h0,...,hn")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-identical output)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("betti", help="Betti numbers of X")
    _add_input(p)
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("inclusion", help="ranks of H_a(X) -> H_a(P^n)")
    _add_input(p)
    p.set_defaults(func=cmd_inclusion)

    p = sub.add_parser("hyperplane", help="G2 table of the pair (X, X cap V)")
    _add_input(p)
    p.add_argument("--normal", required=True, help="h0,...,hn with V = {h = 0}")
    p.add_argument("--emit", choices=["json", "md"], default="json")
    p.set_defaults(func=cmd_hyperplane)

    p = sub.add_parser("oracle-b0", help="sampling estimate of the number of components of X")
    _add_input(p)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--eps", type=float, help="neighborhood radius (default scales with sampling density)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mesh", help="mesh diagnostics")
    msub = p.add_subparsers(dest="mesh_command", required=True)
    d = msub.add_parser("dump", help="labeled, refined mesh as JSON")
    _add_input(d)
    d.set_defaults(func=cmd_mesh_dump)

    p = sub.add_parser("corpus", help="built-in examples")
    csub = p.add_subparsers(dest="corpus_command", required=True)
    r = csub.add_parser("run", help="run every corpus check; exit status 0 iff all pass")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--quadric-sweep", action="store_true", help="add every signature (a,b) with a+b <= n+1 <= 8")
    r.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (SchemaError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StratumResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
