"""Command-line entry point.

    k4flab simulate   --n 256 --seeds 0..9 --checkpoints t1000,m5000 --out runs/
    k4flab staged     --n 500 --profile desk --rounds auto --seeds 0..3 --out runs/
    k4flab trajectory --xmax 10 --step 1e-3 --out table.csv
    k4flab trajectory predict --n 2000 --m 60000
    k4flab survival   dp --tree tree.txt --step 1e-3 --out curve.csv
    k4flab survival   mc --tree tree.txt --t 0.5 --trials 100000 --seed 1
    k4flab survival   t4 --k 1e6 --xmax 3 --out curve.csv
    k4flab ramsey     f3 --graph final.edges --mode exact --budget 2000000
    k4flab ramsey     cover --n 400 --seeds 0..9 --C 2.4 --samples 10000 --out runs/
    k4flab report     --in runs/ --out summary/

Exit codes: 0 success, 2 config error, 3 numeric error, 4 partial results.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import graphcore, greedy, harness, ramsey, rng, staged, survival, trajectory
from .errors import ConfigError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PARTIAL = 4


def parse_seeds(spec: str) -> tuple[int, ...]:
    """Seed list: "a..b" (inclusive), comma list, or a single integer."""
    spec = spec.strip()
    if ".." in spec:
        a, b = spec.split("..")
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ConfigError(f"seed range {spec!r} is empty")
        return tuple(range(lo, hi + 1))
    if "," in spec:
        return tuple(int(s) for s in spec.split(","))
    return (int(spec),)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--master-seed", type=lambda s: int(s, 0),
                   default=rng.DEFAULT_MASTER_SEED)
    p.add_argument("--parallelism", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="k4flab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="random greedy runs over a seed range")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=parse_seeds, required=True)
    p.add_argument("--checkpoints", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-size", type=int, default=200)
    p.add_argument("--stop-frac", type=float, default=None,
                   help="stop once m reaches this multiple of n^(8/5)")
    _common_flags(p)

    p = sub.add_parser("staged", help="staged bite process with tracking")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--profile", choices=sorted(staged.PROFILES), default="desk")
    p.add_argument("--rounds", default="auto")
    p.add_argument("--seeds", type=parse_seeds, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-size", type=int, default=200)
    _common_flags(p)

    p = sub.add_parser("trajectory", help="limit trajectory table / predictions")
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    tsub = p.add_subparsers(dest="mode")
    pp = tsub.add_parser("predict", help="predicted counts at (n, m) as JSON")
    pp.add_argument("--n", type=int, required=True)
    pp.add_argument("--m", type=int, required=True)

    p = sub.add_parser("survival", help="survival curves on alternating trees")
    ssub = p.add_subparsers(dest="mode", required=True)
    pd = ssub.add_parser("dp", help="exact curve by bottom-up quadrature")
    pd.add_argument("--tree", required=True)
    pd.add_argument("--step", type=float, default=1e-3)
    pd.add_argument("--out", default=None)
    pm = ssub.add_parser("mc", help="Monte Carlo estimate at one time")
    pm.add_argument("--tree", required=True)
    pm.add_argument("--t", type=float, required=True)
    pm.add_argument("--trials", type=int, required=True)
    pm.add_argument("--seed", type=int, default=0)
    pt = ssub.add_parser("t4", help="regular-tree limit curve")
    pt.add_argument("--k", type=float, required=True)
    pt.add_argument("--xmax", type=float, default=3.0)
    pt.add_argument("--h", type=float, default=1e-4)
    pt.add_argument("--out", default=None)

    p = sub.add_parser("ramsey", help="triangle-free subsets and coverage")
    rsub = p.add_subparsers(dest="mode", required=True)
    pf = rsub.add_parser("f3", help="largest triangle-free vertex subset")
    pf.add_argument("--graph", required=True)
    pf.add_argument("--mode", dest="f3_mode", choices=("exact", "heuristic"),
                    default="exact")
    pf.add_argument("--budget", type=int, default=None)
    pf.add_argument("--n", type=int, default=None)
    pf.add_argument("--seed", type=int, default=0)
    pc = rsub.add_parser("cover", help="s-subset coverage of greedy finals")
    pc.add_argument("--n", type=int, required=True)
    pc.add_argument("--seeds", type=parse_seeds, required=True)
    pc.add_argument("--C", type=float, default=staged.DEFAULT_COVER_C)
    pc.add_argument("--samples", type=int, default=10000)
    pc.add_argument("--out", required=True)
    pc.add_argument("--probe-budget", type=int, default=None)
    _common_flags(pc)

    p = sub.add_parser("report", help="summarise a result tree for plotting")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)

    return ap


def _cmd_simulate(args) -> int:
    params = {"checkpoints": args.checkpoints, "sample_size": args.sample_size}
    if args.stop_frac is not None:
        params["stop_frac"] = args.stop_frac
    cfg = harness.ExperimentConfig(
        kind="greedy", out_dir=args.out, n_grid=(args.n,), seeds=args.seeds,
        params=params, master_seed=args.master_seed, parallelism=args.parallelism,
    )
    res = harness.run_experiment(cfg)
    return EXIT_PARTIAL if res.partial else EXIT_OK


def _cmd_staged(args) -> int:
    rounds = None if args.rounds == "auto" else int(args.rounds)
    cfg = harness.ExperimentConfig(
        kind="staged", out_dir=args.out, n_grid=(args.n,), seeds=args.seeds,
        params={"profile": args.profile, "rounds": rounds,
                "sample_size": args.sample_size},
        master_seed=args.master_seed, parallelism=args.parallelism,
    )
    res = harness.run_experiment(cfg)
    return EXIT_PARTIAL if res.partial else EXIT_OK


def _cmd_trajectory(args) -> int:
    if args.mode == "predict":
        n, m = args.n, args.m
        if n < 4 or m < 0:
            raise ConfigError(f"need n >= 4 and m >= 0, got n={n} m={m}")
        out = {
            "n": n,
            "m": m,
            "x": m / (0.5 * n ** 1.6),
            "open": trajectory.predicted_open_count(n, m),
            "completions": {
                str(j): trajectory.predicted_completion_count(n, m, j)
                for j in range(1, 6)
            },
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    if args.step <= 0 or args.xmax <= 0:
        raise ConfigError(f"xmax and step must be positive, got "
                          f"xmax={args.xmax} step={args.step}")
    table = trajectory.solve_ode(args.xmax, args.step)
    if args.out:
        trajectory.write_table_csv(table, args.out)
        print(f"[trajectory] {len(table.x)} rows -> {args.out}")
    else:
        print(f"[trajectory] phi({args.xmax:g}) = {table.phi_upper[-1]:.12g}")
    return EXIT_OK


def _cmd_survival(args) -> int:
    if args.mode == "dp":
        tree = survival.load_tree(args.tree)
        curve = survival.survival_dp(tree, args.step)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("t,p,P\n")
                for t, pv, Pv in zip(curve.grid, curve.p, curve.P):
                    fh.write(f"{t:.12g},{pv:.17g},{Pv:.17g}\n")
            print(f"[survival] dp: {len(curve.grid)} rows -> {args.out}")
        else:
            print(f"[survival] dp: p(1) = {curve.p[-1]:.12g} "
                  f"P(1) = {curve.P[-1]:.12g}")
        return EXIT_OK
    if args.mode == "mc":
        tree = survival.load_tree(args.tree)
        mean, se = survival.survival_mc(tree, args.t, args.trials, seed=args.seed)
        print(json.dumps({"t": args.t, "trials": args.trials,
                          "mean": mean, "se": se}))
        return EXIT_OK
    # t4: limit curve for large regular trees
    if args.k < 1:
        raise ConfigError(f"k must be >= 1, got {args.k}")
    curve = survival.regular_tree_limit(args.k, args.xmax, args.h)
    table = trajectory.solve_ode(args.xmax, args.h)
    sup = float(max(abs(curve.P[i] - table.phi_upper[i])
                    for i in range(len(curve.grid))))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("x,p,P\n")
            for x, pv, Pv in zip(curve.grid, curve.p, curve.P):
                fh.write(f"{x:.12g},{pv:.17g},{Pv:.17g}\n")
        print(f"[survival] t4: k={args.k:g} sup|P-phi|={sup:.3e} -> {args.out}")
    else:
        print(f"[survival] t4: k={args.k:g} sup|P-phi|={sup:.3e}")
    return EXIT_OK


def _cmd_ramsey(args) -> int:
    if args.mode == "f3":
        M = graphcore.load_edge_list(args.graph, n=args.n)
        res = ramsey.max_triangle_free_subset(
            M, mode=args.f3_mode, budget=args.budget, seed=args.seed
        )
        print(json.dumps({
            "n": M.n, "m": M.m, "size": res.size, "exact": res.exact,
            "nodes_explored": res.nodes_explored,
            "vertices": sorted(res.vertices),
        }))
        return EXIT_OK
    cfg = harness.ExperimentConfig(
        kind="ramsey", out_dir=args.out, n_grid=(args.n,), seeds=args.seeds,
        params={"C": args.C, "samples": args.samples,
                "probe_budget": args.probe_budget},
        master_seed=args.master_seed, parallelism=args.parallelism,
    )
    res = harness.run_experiment(cfg)
    return EXIT_PARTIAL if res.partial else EXIT_OK


def _cmd_report(args) -> int:
    written = harness.report(args.in_dir, args.out)
    for f in written:
        print(f"[report] {f}")
    return EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "staged": _cmd_staged,
    "trajectory": _cmd_trajectory,
    "survival": _cmd_survival,
    "ramsey": _cmd_ramsey,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    # parse inside the try: seed specs are validated by their argparse
    # type callable, and those errors should exit like any other config
    # problem rather than escape as a traceback
    try:
        args = build_parser().parse_args(argv)
        return _DISPATCH[args.cmd](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
