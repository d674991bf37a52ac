"""Preemption and migration comparison of fn-EDF (discrete) against BF.

Runs the processor x tasks-per-processor matrix, writes one CSV row per
(set, scheduler) and prints per-(M, N) means with the mean per-set ratio.

    python3 scripts/run_comparison.py --procs 2 4 --ratio 2 3 4 --sets 50 --cap 20000
"""
import argparse
import logging
import time

from fnsched.experiment import ExperimentConfig, default_workers, run_experiment, summarize, write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--procs", type=int, nargs="+", default=[2, 4, 6, 8])
    p.add_argument("--ratio", nargs="+", default=["2", "2.5", "3", "3.5", "4"])
    p.add_argument("--sets", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=20_000, help="hyperperiod cap (600000 for full scale)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="comparison.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING)

    cfg = ExperimentConfig(procs=tuple(args.procs), ratios=tuple(args.ratio), sets=args.sets,
                           seed=args.seed, hyperperiod_cap=args.cap)
    start = time.perf_counter()
    rows = run_experiment(cfg, args.workers or default_workers())
    with open(args.out, "w", newline="") as fh:
        write_csv(rows, fh)
    print(f"{len(rows)} rows in {time.perf_counter() - start:.0f}s -> {args.out}")
    print(f"{'M':>3} {'N':>4} {'sets':>5} {'bf p/j':>8} {'fn p/j':>8} {'ratio':>6} "
          f"{'bf m/j':>8} {'fn m/j':>8}")
    for (m, n), s in summarize([r.as_dict() for r in rows]).items():
        print(f"{m:3d} {n:4d} {s['sets']:5d} {s['bf_preempt']:8.3f} {s['fn_preempt']:8.3f} "
              f"{s['ratio']:6.3f} {s['bf_migrate']:8.3f} {s['fn_migrate']:8.3f}")
    misses = sum(r.deadline_misses != 0 for r in rows)
    if misses:
        print(f"warning: {misses} runs missed deadlines or failed")


if __name__ == "__main__":
    main()
