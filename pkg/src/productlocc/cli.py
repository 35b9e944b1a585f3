"""Command-line front end.

Data goes to stdout as JSON (or DOT), diagnostics to stderr.  Exit codes:
0 ok, 1 bad input, 2 no protocol found, 3 counterexample or bound violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import orthograph as og
from .gen import FAMILIES, GeneratorParams, InfeasibleParams, gen_random
from .multicopy import distinguish_multicopy
from .sim import copy_bound, simulate, verify_exclusion_guarantee
from .states import FIXTURES, StateSet, StateSetError, fixture, parse_state_set, serialize_state_set
from .synth import (SynthesisError, bipartite_case, bounded_protocol_search, multipartite_case,
                    small_set_distinguisher, synthesize_bipartite_seven_case,
                    synthesize_multipartite_seven_case, synthesize_seven, synthesize_theorem3_case,
                    theorem3_plan)
from .tree import DEFAULT_DEPTH_LIMIT, SynthesisGoal, TreeError, parse_tree, serialize_tree

EXIT_OK, EXIT_INPUT, EXIT_NOT_FOUND, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(doc) -> None:
    print(json.dumps(doc, indent=1))


def _warn(msg: str) -> None:
    print(msg, file=sys.stderr)


def load_state_set(path: str) -> StateSet:
    if path.startswith("fixture:"):
        return fixture(path.split(":", 1)[1])
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_state_set(text)


def _candidates(s: StateSet, spec: str | None) -> tuple[int, ...]:
    """Parse "1,2,5-7" (1-based, inclusive ranges) into 0-based indices."""
    if not spec:
        return tuple(range(len(s)))
    out: set[int] = set()
    for part in spec.split(","):
        lo, _, hi = part.strip().partition("-")
        try:
            a, b = int(lo), int(hi or lo)
        except ValueError as exc:
            raise InputError(f"bad candidate list {spec!r}") from exc
        if not 1 <= a <= b <= len(s):
            raise InputError(f"candidate range {part!r} outside 1..{len(s)}")
        out.update(range(a - 1, b))
    return tuple(sorted(out))


def _state_index(s: StateSet, label: str) -> int:
    try:
        return s.index_of(label)
    except (KeyError, ValueError):
        if label.isdigit() and 1 <= int(label) <= len(s):
            return int(label) - 1
        raise InputError(f"no state labelled {label!r}") from None


def _witness(w: og.PatternWitness | None, s: StateSet):
    if w is None:
        return None
    return {"kind": w.kind, "vertices": [v + 1 for v in w.vertices],
            "partite": s.signature.names[w.color]}


def case_label(s: StateSet, cands) -> str:
    n = len(cands)
    if n == 7 and s.n_partites == 2:
        return "theorem1 " + bipartite_case(s, cands)[0]
    if n == 7:
        return "theorem4 " + multipartite_case(s, cands)[0]
    if s.n_partites == 2 and n >= 2:
        x, clique, k = theorem3_plan(s, cands)
        if n >= len(clique) + 1:
            return f"theorem3 m={len(clique)} excludes>={k}"
    return "none"


# -- commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    s = load_state_set(args.input)
    cands = _candidates(s, args.candidates)
    g = og.build_ortho_graph(s)
    cliques = {}
    edges = {}
    for p, name in enumerate(s.signature.names):
        q = og.max_local_orthonormal_clique(s, p, cands)
        cliques[name] = {"size": len(q), "states": [v + 1 for v in q]}
        edges[name] = sum(1 for i, j in og.pair_list(len(s))
                          if i in cands and j in cands and p in g.label(i, j))
    multi = sum(1 for i, j in og.pair_list(len(s))
                if i in cands and j in cands and len(g.label(i, j)) > 1)
    report = {
        "n": len(cands),
        "partites": s.n_partites,
        "dims": list(s.signature.dims),
        "complete": g.is_complete(),
        "max_local_clique": cliques,
        "edges_per_partite": edges,
        "multi_label_edges": multi,
        "case": case_label(s, cands),
        "copy_bound": copy_bound(len(cands), s.n_partites),
    }
    if len(cands) in (6, 7):
        sub = s.subset(cands) if len(cands) != len(s) else s
        c = og.canonical_coloring(og.build_ortho_graph(sub))
        w = og.find_mono_triangle(c) if len(cands) == 6 else og.find_triangle_or_p4(c)
        if w is not None:
            w = og.PatternWitness(w.kind, tuple(cands[v] for v in w.vertices), w.color)
        report["pattern_witness"] = _witness(w, s)
    _emit(report)
    return EXIT_OK


def cmd_graph(args) -> int:
    s = load_state_set(args.input)
    g = og.build_ortho_graph(s)
    if args.dot:
        sys.stdout.write(og.export_dot(g))
    else:
        _emit({"n": g.n, "edges": [
            {"pair": [i + 1, j + 1], "partites": [s.signature.names[p] for p in sorted(g.label(i, j))]}
            for i, j in og.pair_list(g.n)]})
    return EXIT_OK


def cmd_synthesize(args) -> int:
    s = load_state_set(args.input)
    cands = _candidates(s, args.candidates)
    if args.goal == "full":
        depth = args.depth or min(2 * len(cands), DEFAULT_DEPTH_LIMIT)
        tree = bounded_protocol_search(s, cands, SynthesisGoal.full(), depth_limit=depth,
                                       anchor_limit=args.anchors or len(cands))
        if tree is None:
            _warn(f"not_found: no anchored protocol of depth <= {depth} distinguishes "
                  f"{[c + 1 for c in cands]}")
            return EXIT_NOT_FOUND
        _warn("goal full_distinguish")
        print(serialize_tree(tree))
        return EXIT_OK
    theorem = args.theorem
    if theorem is None:
        if len(cands) == 7:
            syn = synthesize_seven(s, cands)
        elif s.n_partites == 2:
            syn = synthesize_theorem3_case(s, cands)
        else:
            raise InputError(f"no exclusion theorem covers {len(cands)} states over "
                             f"{s.n_partites} partites; pass --theorem or --goal full")
    elif theorem == 1:
        syn = synthesize_bipartite_seven_case(s, cands)
    elif theorem == 3:
        syn = synthesize_theorem3_case(s, cands)
    else:
        syn = synthesize_multipartite_seven_case(s, cands)
    _warn(f"{syn.case}; goal {syn.goal}")
    print(serialize_tree(syn.tree))
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = load_state_set(args.input)
    try:
        text = open(args.tree, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {args.tree}: {exc.strerror}") from exc
    tree = parse_tree(text)
    targets = [_state_index(s, args.true)] if args.true else list(tree.all_candidates)
    runs = simulate(tree, s, targets)
    doc = {"runs": {s.labels[t]: [{"leaf": [c + 1 for c in lf.candidates], "probability": p}
                                  for lf, p in runs[t]] for t in targets}}
    code = EXIT_OK
    if args.k is not None or args.full:
        goal = SynthesisGoal.full() if args.full else SynthesisGoal.exclude(args.k)
        bad = verify_exclusion_guarantee(tree, s, goal)
        doc["goal"] = str(goal)
        doc["verified"] = bad is None
        if bad is not None:
            doc["violation"] = str(bad)
            code = EXIT_COUNTEREXAMPLE
    _emit(doc)
    return code


def cmd_distinguish(args) -> int:
    s = load_state_set(args.input)
    cands = _candidates(s, args.candidates)
    t = _state_index(s, args.true)
    if t not in cands:
        raise InputError(f"true state {args.true} is not among the candidates")
    report = distinguish_multicopy(s, t, args.seed, candidates=cands)
    _emit(report.to_dict(s))
    if not report.within_bound:
        _warn(f"bound violation: {report.copies_used} copies > {report.bound}")
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK if report.success else EXIT_COUNTEREXAMPLE


def cmd_verify(args) -> int:
    if args.lemma == "lemma3":
        report = og.verify_lemma3_exhaustive()
    elif args.exhaustive:
        report = og.verify_lemma4_exhaustive(limit=args.limit)
    else:
        if args.samples < 1:
            raise InputError("--samples must be >= 1")
        report = og.verify_lemma4_sampled(args.samples, args.seed)
    _emit(report)
    return EXIT_COUNTEREXAMPLE if report["counterexamples"] else EXIT_OK


def cmd_fixtures(args) -> int:
    print(serialize_state_set(fixture(args.name)))
    return EXIT_OK


def _dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(d) for d in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}") from exc


def cmd_gen_random(args) -> int:
    params = GeneratorParams(len(args.dims), args.dims, args.n_states, args.seed, args.family,
                             clique=args.clique, forbid_p4=args.forbid_p4)
    print(serialize_state_set(gen_random(params)))
    return EXIT_OK


def cmd_polygon_stats(args) -> int:
    _emit(og.polygon_stats(args.n, args.colors, args.samples, args.seed))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="productlocc",
                                 description="Exclusion and multi-copy discrimination of "
                                             "orthogonal product states.")
    sub = ap.add_subparsers(dest="command", required=True)
    inp = "state-set JSON path, '-' for stdin, or fixture:NAME"

    p = sub.add_parser("analyze", help="orthogonality structure and applicable case")
    p.add_argument("input", help=inp)
    p.add_argument("--candidates", help="1-based subset, e.g. 1-8 or 1,3,5")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("graph", help="edge-labelled orthogonality graph")
    p.add_argument("input", help=inp)
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("synthesize", help="single-copy protocol tree")
    p.add_argument("input", help=inp)
    p.add_argument("--theorem", type=int, choices=(1, 3, 4))
    p.add_argument("--goal", choices=("exclude", "full"), default="exclude")
    p.add_argument("--candidates")
    p.add_argument("--depth", type=int, help="search depth for --goal full")
    p.add_argument("--anchors", type=int, help="anchor limit for --goal full")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run a protocol tree against true states")
    p.add_argument("input", help=inp)
    p.add_argument("tree", help="protocol tree JSON")
    p.add_argument("--true", help="label (or 1-based index) of a single true state")
    p.add_argument("--k", type=int, help="also verify that every leaf excludes >= k states")
    p.add_argument("--full", action="store_true", help="also verify full distinguishing")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("distinguish", help="multi-copy identification of a true state")
    p.add_argument("input", help=inp)
    p.add_argument("--true", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidates")
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("verify", help="check the graph-coloring lemmas")
    p.add_argument("lemma", choices=("lemma3", "lemma4"))
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--limit", type=int, default=None, help="cap for the exhaustive lemma4 scan")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fixtures", help="print a built-in state set")
    p.add_argument("name", choices=FIXTURES)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("gen-random", help="seeded random orthogonal product states")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--n-states", type=int, required=True)
    p.add_argument("--clique", type=int)
    p.add_argument("--forbid-p4", action="store_true")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("polygon-stats", help="largest monochromatic clique in random colorings")
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--colors", type=int, default=3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_polygon_stats)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SynthesisError as exc:
        _warn(f"not_found: {exc}")
        if exc.instance is not None:
            _warn(exc.dump())
        return EXIT_NOT_FOUND
    except (InputError, StateSetError, TreeError, InfeasibleParams, KeyError, ValueError) as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
