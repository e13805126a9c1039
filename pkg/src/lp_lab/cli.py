"""Command-line interface: ``lp-lab <command> ...``.

Every run can write its output with ``-o FILE``; a manifest with the exact
argument vector, seed, version and graph hashes is written next to it as
``FILE.manifest.json``.  ``lp-lab --replay FILE.manifest.json`` re-runs it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence
from fractions import Fraction

from . import __version__, calkin, simulator
from .errors import CapacityError, NumericError, ParseError, StructuralError
from .gf2_tanner import (
    TannerGraph,
    augment,
    check_expansion,
    delta_min_cyclic_sum,
    emit_alist,
    girth,
    is_nondegenerate,
    load_graph,
    sample_check_regular,
    sample_variable_regular,
    word_from_str,
)
from .lp_core import (
    build_fundamental_polytope,
    bsc_pseudoweight,
    channel_llr,
    enumerate_vertices,
    frac_str,
    lp_decode,
    ml_decode,
    strength_ratio,
)
from .witness import (
    find_dual_witness,
    find_hyperflow,
    find_narrow_dual_witness,
    primitivize,
    verify_dual_witness,
)

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_NUMERIC = 0, 2, 3, 4


class _Output:
    """Collects a table or a JSON structure and renders it in the chosen format."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.graphs: list[TannerGraph] = []
        self.text: str | None = None

    def table(self, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        if self.fmt == "json":
            self.text = json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            self.text = buf.getvalue()

    def record(self, obj: dict) -> None:
        if self.fmt == "csv":
            self.table(list(obj), [list(obj.values())])
        else:
            self.text = json.dumps(obj, indent=2) + "\n"

    def raw(self, text: str) -> None:
        self.text = text if text.endswith("\n") else text + "\n"


def _graph(path: str, out: _Output) -> TannerGraph:
    G = load_graph(path)
    out.graphs.append(G)
    return G


def _gamma(G: TannerGraph, args) -> tuple[Fraction, ...]:
    if args.gamma is not None:
        vals = [Fraction(v) for v in args.gamma.replace(",", " ").split()]
        if len(vals) != G.n:
            raise StructuralError(f"gamma has {len(vals)} entries, expected {G.n}")
        return tuple(vals)
    y = word_from_str(args.y) if args.y else 0
    return channel_llr(y, G.n)


def cmd_gen(args, out: _Output) -> None:
    if args.kind == "check-regular":
        G = sample_check_regular(args.n, args.m, args.d, args.seed)
    else:
        G = sample_variable_regular(args.n, args.m, args.d, args.seed)
    out.graphs.append(G)
    out.raw(emit_alist(G) if args.format == "alist" else G.to_json())


def cmd_augment(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    H = augment(G, args.k, args.budget)
    out.raw(emit_alist(H) if args.format == "alist" else H.to_json())


def cmd_diag(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    res: dict = {"n": G.n, "m": G.m, "girth": _num(girth(G))}
    delta = delta_min_cyclic_sum(G)
    res["delta"] = _num(getattr(delta, "upper_bound", delta))
    res["delta_exact"] = not hasattr(delta, "upper_bound")
    if args.s is not None:
        v = is_nondegenerate(G, args.s, args.k, seed=args.seed)
        res["nondegenerate"] = v.holds
    if args.max_set is not None:
        v = check_expansion(G, args.max_set, Fraction(args.kappa), seed=args.seed)
        res["expanding"] = v.holds
    out.record(res)


def _num(v):
    return "inf" if v == math.inf else v


def cmd_decode(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    gamma = _gamma(G, args)
    r = lp_decode(G, gamma)
    res = {"status": r.status, "value": frac_str(r.value)}
    if r.certificate is not None:
        res["case"] = r.case
        res["certificate"] = [frac_str(v) for v in r.certificate]
    if args.ml:
        ml = ml_decode(G, gamma)
        res["ml_value"] = frac_str(ml.value)
        res["ml_unique_zero"] = ml.unique_zero
    out.record(res)


def cmd_witness(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    gamma = _gamma(G, args)
    res: dict = {"mode": args.mode}
    if args.mode == "find":
        w = find_dual_witness(G, gamma)
    elif args.mode == "narrow":
        w = find_narrow_dual_witness(G, word_from_str(args.y) if args.y else 0)
    else:
        found = find_hyperflow(G, gamma, require_acyclic=args.mode != "hyperflow")
        w = None
        if found is not None:
            D, w = found
            if args.mode == "primitivize":
                pr = primitivize(G, gamma, D)
                w = pr.weighting
                res["verified"] = pr.verified
                res["trace"] = json.loads(pr.trace_json())
    res["found"] = w is not None
    if w is not None:
        res["valid"] = bool(verify_dual_witness(G, gamma, w))
        res["witness"] = json.loads(w.to_json(gamma))
    out.record(res)


def cmd_vertices(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    verts = enumerate_vertices(build_fundamental_polytope(G), method=args.method)
    pw = bsc_pseudoweight(verts)
    res = {
        "count": len(verts),
        "integral": sum(v.is_integral() for v in verts),
        "pseudoweight": _num(pw) if pw == math.inf else frac_str(pw),
        "vertices": [[frac_str(c) for c in v.coords] for v in verts],
    }
    if args.alpha_count:
        res["strength_ratio"] = frac_str(strength_ratio(verts, args.alpha_count))
    if args.format == "csv":
        out.table(["vertex"], [[" ".join(r)] for r in res["vertices"]])
    else:
        out.record(res)


def cmd_calkin(args, out: _Output) -> None:
    if args.what == "beta":
        p = calkin.beta_d(args.d, args.tol)
        out.record({"d": p.d, "alpha_d": p.alpha_d, "beta_d": round(p.beta_d, 4), "beta_d_full": p.beta_d})
    elif args.what == "eigen":
        r1, r2 = calkin.verify_decomposition(args.n, args.d)
        lam = calkin.eigenvalues_exact(args.n, args.d)
        out.record({"n": args.n, "d": args.d, "eigenvalues": [frac_str(v) for v in lam], "residual_A": r1, "residual_U": r2})
    elif args.what == "bound":
        b = calkin.nondegeneracy_bound(args.n, args.m, args.d, args.g, args.k)
        out.record({"n": args.n, "m": args.m, "d": args.d, "g": args.g, "k": args.k, "log2_bound": b})
    else:
        e = calkin.empirical_degeneracy(args.n, args.m, args.d, args.s, args.k, args.trials, args.seed)
        if args.format == "csv":
            out.raw(calkin.degeneracy_csv([e]))
        else:
            out.record({k: getattr(e, k) for k in calkin.DegeneracyEstimate.CSV_FIELDS})


def cmd_sim(args, out: _Output) -> None:
    G = _graph(args.graph, out)
    if args.what == "wer":
        r = simulator.wer_estimate(G, args.epsilon, args.trials, args.seed, args.jobs)
        out.table(simulator.ScanResult.CSV_FIELDS, [[r.graph_id, "G", r.epsilon, r.trials, r.failures, r.wer, r.ci_lo, r.ci_hi]])
    elif args.what == "threshold":
        if any(k < G.d_max for k in args.k):
            raise ValueError(f"-k must be at least the largest check degree {G.d_max} for the polytopes to nest")
        variants = [("G", G)] + [(f"G{k}", augment(G, k)) for k in args.k] + ([("Gbar", augment(G))] if args.full else [])
        grid = [float(v) for v in args.grid.split(",")]
        sr = simulator.threshold_scan(variants, grid, args.trials, args.seed, args.jobs)
        if args.format == "json":
            out.record({v: {"grid": e.grid, "wer": e.wer, "crossings": {str(k): c for k, c in e.crossings.items()}}
                        for v, e in sr.estimates.items()})
        else:
            out.raw(sr.to_csv())
    elif args.what == "help":
        plain, helped = simulator.help_wer(G, args.epsilon, args.b, args.trials, args.seed)
        out.record({"epsilon": args.epsilon, "b": args.b, "trials": args.trials, "plain_failures": plain.failures, "help_failures": helped.failures})
    else:
        fn = simulator.excess_experiment if args.what == "excess" else simulator.deficiency_experiment
        r = fn(G, args.epsilon, args.delta, args.trials, args.seed)
        out.record(json.loads(r.to_json()))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["json", "csv", "alist"], default="json")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("-o", "--output")

    p = argparse.ArgumentParser(prog="lp-lab", description="LP decoding and dual-witness experiments.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--replay", metavar="MANIFEST", help="re-run the command recorded in a manifest")
    sub = p.add_subparsers(dest="command")

    g = sub.add_parser("gen", parents=[common], help="sample a Tanner graph")
    g.add_argument("--kind", choices=["check-regular", "variable-regular"], default="variable-regular")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-m", type=int, required=True)
    g.add_argument("-d", type=int, required=True, help="row weight (check-regular) or variable degree")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("augment", parents=[common], help="add redundant checks of weight <= k")
    a.add_argument("graph")
    a.add_argument("-k", type=int, default=None, help="omit for all redundant checks")
    a.add_argument("--budget", type=int, default=None)
    a.set_defaults(func=cmd_augment)

    d = sub.add_parser("diag", parents=[common], help="girth, cyclic-sum weight, nondegeneracy, expansion")
    d.add_argument("graph")
    d.add_argument("-s", type=int)
    d.add_argument("-k", type=int, default=0)
    d.add_argument("--max-set", type=int)
    d.add_argument("--kappa", default="1/2")
    d.set_defaults(func=cmd_diag)

    for name, func, extra in (("decode", cmd_decode, True), ("witness", cmd_witness, False)):
        c = sub.add_parser(name, parents=[common], help=f"{name} one received word or LLR vector")
        c.add_argument("graph")
        c.add_argument("--y", help="received word as a bit string, variable 0 first")
        c.add_argument("--gamma", help="explicit LLR vector, e.g. '1,-1,1/2'")
        if extra:
            c.add_argument("--ml", action="store_true", help="also run brute-force ML")
        else:
            c.add_argument("--mode", choices=["find", "narrow", "hyperflow", "acyclic", "primitivize"], default="find")
        c.set_defaults(func=func)

    v = sub.add_parser("vertices", parents=[common], help="enumerate fundamental-polytope vertices")
    v.add_argument("graph")
    v.add_argument("--method", choices=["cdd", "subsets"], default="cdd")
    v.add_argument("--alpha-count", type=int, default=0)
    v.set_defaults(func=cmd_vertices)

    k = sub.add_parser("calkin", parents=[common], help="rank-threshold numerics")
    k.add_argument("what", choices=["beta", "eigen", "bound", "empirical"])
    k.add_argument("-d", type=int, default=3)
    k.add_argument("-n", type=int, default=12)
    k.add_argument("-m", type=int, default=8)
    k.add_argument("-g", type=int, default=4)
    k.add_argument("-s", type=int, default=4)
    k.add_argument("-k", type=int, default=2)
    k.add_argument("--trials", type=int, default=100)
    k.add_argument("--tol", type=float, default=1e-10)
    k.set_defaults(func=cmd_calkin)

    s = sub.add_parser("sim", parents=[common], help="BSC Monte-Carlo experiments")
    s.add_argument("what", choices=["wer", "threshold", "help", "excess", "deficiency"])
    s.add_argument("graph")
    s.add_argument("--epsilon", type=float, default=0.05)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--grid", default="0.01,0.02,0.05,0.1,0.15,0.2")
    s.add_argument("-k", type=int, nargs="*", default=[], help="redundant-check weights for threshold variants")
    s.add_argument("--full", action="store_true", help="include the all-redundant-checks variant")
    s.add_argument("-b", type=int, default=1, help="help bits")
    s.set_defaults(func=cmd_sim)
    return p


def run(argv: Sequence[str]) -> tuple[int, str]:
    """Dispatch ``argv``; returns the exit code and the rendered output."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return (EXIT_USAGE if e.code else EXIT_OK), ""
    if args.replay:
        with open(args.replay, encoding="utf-8") as fh:
            return run(json.load(fh)["argv"])
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE, ""
    out = _Output(args.format)
    try:
        args.func(args, out)
    except CapacityError as e:
        print(f"capacity: {e}", file=sys.stderr)
        return EXIT_CAPACITY, ""
    except NumericError as e:
        print(f"numeric: {e}", file=sys.stderr)
        return EXIT_NUMERIC, ""
    except (ParseError, StructuralError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE, ""
    text = out.text or ""
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        params = {k: v for k, v in vars(args).items() if k not in ("func", "replay", "output")}
        man = simulator.manifest(args.command, params, args.seed, out.graphs)
        man["argv"] = list(argv)
        with open(args.output + ".manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(man, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK, text


def main(argv: Sequence[str] | None = None) -> int:
    code, text = run(sys.argv[1:] if argv is None else argv)
    if text:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
