"""Command-line front end: generate, solve, benchmark, profile.

Subcommands
-----------
gen      write seeded benchmark instances as JSON model files
solve    run one solver configuration on one model file
bench    run configuration suites over a directory of model files
profile  turn a results CSV into performance-profile points

``solve`` composes freely: ``--reform`` rewrites the instance first and
``--algorithm`` picks the search; ``--reform none`` attaches the static
tower rows (the fixed-lifting configurations), while any rewrite switches
to the dynamic cut pools, mirroring the named bench configurations.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .bench import (
    CONFIGS,
    profile,
    read_records,
    run_suite,
    summarize,
    write_profile,
    write_records,
    write_summary,
)
from .bnb import Limits, RefineStrategy, solve_lifted, solve_oa
from .model import max_cone_violation, read_instance, write_instance
from .portfolio import gen_fball, gen_random_suite
from .reform import NotApplicable, REFORMS

ALGORITHMS = ("lifted-cut", "lifted-branch", "oa")
FAMILIES = ("classical", "shortfall", "robust", "fball")


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.family == "fball":
        if args.count != 1:
            print("gen: fball is deterministic in n; ignoring --count",
                  file=sys.stderr)
        path = out / f"fball-{args.n}.json"
        write_instance(gen_fball(args.n), path)
        written.append(path.name)
        note = f"fball-{args.n}: integer-free ball, radius sqrt((n-1)/4)"
    else:
        for i, inst in enumerate(
                gen_random_suite(args.family, args.n, args.count, args.seed)):
            path = out / f"{args.family}-{args.n}-{i:02d}.json"
            write_instance(inst, path)
            written.append(path.name)
        note = (f"{args.family}-{args.n} x{args.count} seed={args.seed}: "
                "abar~U[0.9,1.3], Qhalf=0.1*F*Diag(U[0,1]) rescaled to mean "
                "asset vol 0.2, sigma=0.2, K=min(10,n-1)")
    with open(out / "MANIFEST.txt", "a", encoding="utf-8") as fh:
        fh.write(note + "\n")
    for name in written:
        print(name)
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst = read_instance(args.infile)
    transform = REFORMS[args.reform]
    if transform is None:
        ref_inst, back = inst, None
    else:
        try:
            ref = transform(inst)
        except NotApplicable as exc:
            print(f"solve: reform {args.reform!r} does not apply: {exc}",
                  file=sys.stderr)
            return 2
        ref_inst, back = ref.inst, ref.back_map
    limits = Limits(time_limit=args.timelimit)
    trace = sys.stderr if args.trace else None
    t0 = time.perf_counter()
    if args.algorithm == "oa":
        res = solve_oa(ref_inst, limits=limits, trace=trace)
    else:
        strategy = (RefineStrategy.CUT_BASED if args.algorithm == "lifted-cut"
                    else RefineStrategy.BRANCH_BASED)
        res = solve_lifted(ref_inst, eps=args.eps, strategy=strategy,
                           use_static=args.reform == "none", limits=limits,
                           trace=trace)
    elapsed = time.perf_counter() - t0
    x = res.x
    if x is not None and back is not None:
        x = back(x)
    print(f"status {res.status.value}")
    print(f"objective {res.objective!r}")
    print(f"best_bound {res.best_bound!r}")
    print(f"nodes {res.stats.nodes}")
    print(f"cuts {res.stats.cuts}")
    print(f"lp_solves {res.stats.lp_solves}")
    print(f"conic_solves {res.stats.conic_solves}")
    if x is not None:
        print(f"max_violation {max_cone_violation(inst, x)!r}")
        print("x " + " ".join(repr(float(v)) for v in x))
    print(f"time_s {elapsed:.3f}")
    return 0 if res.status.value in ("Optimal", "Infeasible", "Unbounded") else 3


# ---------------------------------------------------------------------------
# bench / profile
# ---------------------------------------------------------------------------


def cmd_bench(args) -> int:
    suite_dir = Path(args.suite)
    paths = sorted(suite_dir.glob("*.json"))
    if not paths:
        print(f"bench: no .json model files under {suite_dir}", file=sys.stderr)
        return 2
    instances = [(p.stem, read_instance(p)) for p in paths]
    configs = None if args.configs is None else args.configs.split(",")
    records = run_suite(instances, configs=configs, time_limit=args.timelimit,
                        threads=args.threads)
    write_records(records, args.out)
    rows = summarize(records)
    if args.summary:
        write_summary(rows, args.summary)
    header = (f"{'config':<16} {'n':>3} {'solved':>6} {'min':>8} {'avg':>8} "
              f"{'max':>8} {'std':>8} {'wins':>4} {'1%':>4} {'10%':>4}")
    print(header)
    for r in rows:
        print(f"{r.config:<16} {r.n_records:>3} {r.solved:>6} "
              f"{r.min_time:>8.2f} {r.avg_time:>8.2f} {r.max_time:>8.2f} "
              f"{r.std_time:>8.2f} {r.wins:>4} {r.win_1pct:>4} {r.win_10pct:>4}")
    return 0


def cmd_profile(args) -> int:
    records = read_records(args.infile)
    write_profile(profile(records), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="micqp",
        description="LP-based branch-and-bound for mixed-integer "
                    "conic-quadratic models, with lifted cone relaxations.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write seeded benchmark instances")
    gen.add_argument("--family", required=True, choices=FAMILIES)
    gen.add_argument("--n", required=True, type=int, help="number of assets")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="solve one model file")
    solve.add_argument("--in", dest="infile", required=True)
    solve.add_argument("--algorithm", choices=ALGORITHMS, default="lifted-cut")
    solve.add_argument("--reform", choices=tuple(REFORMS), default="none")
    solve.add_argument("--eps", type=float, default=0.01,
                       help="static lifting quality (lifted algorithms)")
    solve.add_argument("--timelimit", type=float, default=None)
    solve.add_argument("--seed", type=int, default=0,
                       help="reserved; all solvers are deterministic")
    solve.add_argument("--trace", action="store_true",
                       help="JSON event lines on stderr")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="run configs over a model directory")
    bench.add_argument("--suite", required=True, help="directory of .json models")
    bench.add_argument("--configs", default=None,
                       help=f"comma-separated subset of {','.join(CONFIGS)}")
    bench.add_argument("--out", required=True, help="records CSV path")
    bench.add_argument("--summary", default=None, help="summary CSV path")
    bench.add_argument("--timelimit", type=float, default=60.0)
    bench.add_argument("--threads", type=int, default=1)
    bench.set_defaults(func=cmd_bench)

    prof = sub.add_parser("profile", help="performance profile from records CSV")
    prof.add_argument("--in", dest="infile", required=True)
    prof.add_argument("--out", required=True)
    prof.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
