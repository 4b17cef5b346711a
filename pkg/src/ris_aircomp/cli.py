"""Command line entry point: ``run``, ``oracle`` and ``timing`` subcommands."""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from . import bench
from .channel import SystemConfig, load_config


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="base seed (overrides the file)")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    p.add_argument("--out", default=None, help="output CSV path")


def _cmd_run(args):
    spec = bench.load_experiment(args.spec)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.out is not None:
        changes["out"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    spec = replace(spec, **changes)
    if spec.out is None:
        spec = replace(spec, out="results.csv")

    def progress(i, n):
        if not args.quiet:
            print(f"\r{i}/{n} trials", end="", file=sys.stderr, flush=True)

    result = bench.run_experiment(spec, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
        for s in result.summary:
            value = "" if s.value is None else f"{spec.axis}={s.value:g} "
            print(f"{s.method:>13s} {value}mean mse {s.mean_mse:.4e} ({s.mean_mse_db:.2f} dB)"
                  f" infeasible={s.infeasible}")
    if args.strict and result.has_infeasible:
        print("infeasible rows present", file=sys.stderr)
        return 2
    return 0


def _cmd_oracle(args):
    if args.config:
        config, seed = load_config(args.config)
    else:
        config, seed = SystemConfig(K=args.k, M=args.m, N=args.n), None
    seed = args.seed if args.seed is not None else (seed or 0)
    trials = args.trials or 20
    rows = bench.oracle_check(config, trials=trials, seed=seed,
                              phase_grid_size=args.grid, beam_samples=args.beams)
    out = args.out or "oracle.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "K", "M", "N", "mse_altermin", "mse_brute_force", "rel_gap"])
        for r in rows:
            writer.writerow([r.seed, r.K, r.M, r.N, repr(r.mse_altermin), repr(r.mse_brute_force),
                             repr(r.rel_gap)])
    worst = max(abs(r.rel_gap) for r in rows)
    print(f"{len(rows)} scenarios, worst relative gap {worst:.4%}")
    if args.strict and any(r.rel_gap > args.tolerance for r in rows):
        return 2
    return 0


def _cmd_timing(args):
    table = bench.timing_sweep(
        K_values=tuple(args.k_values), N_values=tuple(args.n_values),
        iters=args.iters, repeats=args.repeats, seed=args.seed or 0,
    )
    bench.write_timing(table, args.out or "timing.csv")
    for r in table.rows:
        print(f"K={r.K:5d} N={r.N:5d} {1e6 * r.per_iter_s:10.2f} us/iter")
    print(f"log-log slope in K: {table.slope_K:.3f}, in N: {table.slope_N:.3f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="ris-aircomp", description=__doc__)
    parser.add_argument("--strict", action="store_true",
                        help="nonzero exit code on infeasible rows / failed oracle checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment file")
    run.add_argument("spec", help="YAML experiment file")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--quiet", action="store_true")
    _add_common(run)
    run.set_defaults(func=_cmd_run)

    oracle = sub.add_parser("oracle", help="compare altermin with brute force on tiny scenarios")
    oracle.add_argument("--config", default=None, help="YAML scenario file")
    oracle.add_argument("--k", type=int, default=3)
    oracle.add_argument("--m", type=int, default=2)
    oracle.add_argument("--n", type=int, default=3)
    oracle.add_argument("--grid", type=int, default=24, help="phase grid points per element")
    oracle.add_argument("--beams", type=int, default=256, help="beamformer samples")
    oracle.add_argument("--tolerance", type=float, default=0.05)
    _add_common(oracle)
    oracle.set_defaults(func=_cmd_oracle)

    timing = sub.add_parser("timing", help="per-iteration Mirror-Prox cost sweep")
    timing.add_argument("--k-values", type=int, nargs="+", default=[100, 200, 400])
    timing.add_argument("--n-values", type=int, nargs="+", default=[100, 200, 400])
    timing.add_argument("--iters", type=int, default=1000)
    timing.add_argument("--repeats", type=int, default=7)
    _add_common(timing)
    timing.set_defaults(func=_cmd_timing)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
