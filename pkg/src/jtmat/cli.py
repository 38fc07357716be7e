"""``jtmat`` command-line interface.

Exit status: 0 on success, 2 for bad input (unreadable or invalid files,
bad flags), 3 when an internal invariant breaks.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bench
from .errors import InternalError, InvalidInputError, JtmatError
from .junction_tree import compile_network, load_tree, save_tree
from .materializer import load_catalog, save_catalog
from .network_io import BUNDLED, bundled_network, load_network
from .query_engine import Query, answer, load_queries
from .workload import estimate_probabilities, generate_skewed, generate_uniform, save_queries, split

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3


def _network(spec: str):
    path = Path(spec)
    if path.exists():
        return load_network(path)
    if spec.lower() in BUNDLED:
        return bundled_network(spec)
    raise InvalidInputError(f"no such network file {spec!r} (bundled: {', '.join(sorted(BUNDLED))})")


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sizes(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected MIN,MAX") from None
    return lo, hi


def _lambdas(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def cmd_build(args) -> int:
    bn = _network(args.network)
    jt = compile_network(bn)
    save_tree(jt, args.out)
    s = jt.summary()
    print(f"network={bn.name} cliques={s['cliques']} diameter={s['diameter']} treewidth={s['treewidth']} "
          f"pivot={s['pivot']} separator_total={s['separator_total']}")
    return EXIT_OK


def cmd_gen_workload(args) -> int:
    jt = load_tree(args.tree)
    gen = generate_skewed if args.kind == "skewed" else generate_uniform
    queries = gen(jt, args.count, args.sizes, args.seed)
    if args.split is not None:
        train, test = split(queries, args.split)
        save_queries(jt, train, args.out)
        if args.test_out:
            save_queries(jt, test, args.test_out)
    else:
        save_queries(jt, queries, args.out)
    return EXIT_OK


def cmd_materialize(args) -> int:
    jt = load_tree(args.tree)
    K = bench.resolve_budget(jt, args.budget, args.budget_bt)
    log = estimate_probabilities(load_queries(jt, args.workload))
    cat, seconds = bench.timed_build(jt, log, K, args.epsilon, args.mode)
    save_catalog(cat, args.out)
    print(f"mode={cat.mode} shortcuts={len(cat.shortcuts)} target_budget={K} actual_budget={cat.actual_budget} "
          f"separator_total={jt.separator_total()} offline_seconds={seconds:.3f}")
    return EXIT_OK


def cmd_query(args) -> int:
    jt = load_tree(args.tree)
    cat = load_catalog(args.catalog, jt) if args.catalog else None
    if args.query:
        q = Query(jt.var_ids(n.strip() for n in args.query.split(",")))
        res = answer(jt, q, cat)
        names = jt.var_names(q.variables)
        lines = [",".join(names + ["probability"])]
        states = [jt.variables[v].states or tuple(str(i) for i in range(jt.variables[v].cardinality))
                  for v in q.variables]
        for idx in np.ndindex(*res.answer.cards):
            lines.append(",".join([states[i][k] for i, k in enumerate(idx)] + [repr(float(res.answer.values[idx]))]))
        _write("\n".join(lines) + "\n", args.out)
        print(f"cost={res.cost} shortcuts={' '.join(map(str, res.shortcuts_used)) or '-'}", file=sys.stderr)
        return EXIT_OK
    if not args.workload:
        raise InvalidInputError("give --query or --workload")
    report = bench.run_bench(jt, cat, load_queries(jt, args.workload))
    _write(report.to_csv(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    jt = load_tree(args.tree)
    cat = load_catalog(args.catalog, jt) if args.catalog else None
    report = bench.run_bench(jt, cat, load_queries(jt, args.workload))
    _write(report.to_csv(), args.out)
    print(f"queries={len(report.records)} mean_savings_pct={report.mean_savings():.3f} "
          f"median_savings_pct={report.median_savings():.3f} actual_budget={report.actual_budget}", file=sys.stderr)
    return EXIT_OK


def cmd_robustness(args) -> int:
    jt = load_tree(args.tree)
    if len(args.workload) != 2:
        raise InvalidInputError("robustness needs exactly two --workload files")
    first, second = (load_queries(jt, w) for w in args.workload)
    catalogs: dict = {"none": None}
    for path in args.catalog or []:
        cat = load_catalog(path, jt)
        name = cat.mode if cat.mode not in catalogs else f"{cat.mode}:{Path(path).stem}"
        catalogs[name] = cat
    rows = bench.robustness(jt, catalogs, first, second, args.lambdas)
    _write(bench.robustness_csv(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jtmat", description="Workload-aware shortcut materialization for junction trees.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="compile a network into a calibrated junction tree")
    b.add_argument("--network", required=True, help="BIF or native network file, or a bundled name")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    g = sub.add_parser("gen-workload", help="generate a synthetic query log")
    g.add_argument("--tree", required=True)
    g.add_argument("--kind", choices=["skewed", "uniform"], default="skewed")
    g.add_argument("--count", type=int, default=3000)
    g.add_argument("--sizes", type=_sizes, default=(1, 5), help="MIN,MAX query size (default 1,5)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--split", type=int, help="write the first N queries to --out and the rest to --test-out")
    g.add_argument("--test-out")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_workload)

    m = sub.add_parser("materialize", help="select and materialize shortcuts for a training log")
    m.add_argument("--tree", required=True)
    m.add_argument("--workload", required=True)
    budget = m.add_mutually_exclusive_group(required=True)
    budget.add_argument("--budget", type=int, help="budget in table entries")
    budget.add_argument("--budget-bt", type=float, help="budget as a multiple of the total separator size")
    m.add_argument("--epsilon", type=float, default=1.0)
    m.add_argument("--mode", choices=["peanut", "peanut+", "none"], default="peanut")
    m.add_argument("--seed", type=int, default=0, help="accepted for symmetry; selection is deterministic")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_materialize)

    q = sub.add_parser("query", help="answer one query or a query file")
    q.add_argument("--tree", required=True)
    q.add_argument("--catalog")
    q.add_argument("--query", help="comma-separated variable names")
    q.add_argument("--workload")
    q.add_argument("--out")
    q.set_defaults(func=cmd_query)

    be = sub.add_parser("bench", help="cost savings report for a test log")
    be.add_argument("--tree", required=True)
    be.add_argument("--catalog")
    be.add_argument("--workload", required=True)
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)

    r = sub.add_parser("robustness", help="average costs on mixtures of two test logs")
    r.add_argument("--tree", required=True)
    r.add_argument("--catalog", action="append")
    r.add_argument("--workload", action="append", required=True, help="give twice: first and second log")
    r.add_argument("--lambdas", type=_lambdas, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    r.add_argument("--out")
    r.set_defaults(func=cmd_robustness)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"jtmat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InternalError, JtmatError) as exc:
        print(f"jtmat: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
