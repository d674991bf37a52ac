"""Command-line front end.

    fnsched simulate TASKSET --scheduler fnedf --model discrete [--trace FILE]
    fnsched experiment --procs 2 4 --ratio 4 --sets 100 --seed 1 --out runs.csv
    fnsched generate --procs 2 --tasks 8 --seed 3
    fnsched verify TASKSET

Exit codes: 0 success, 1 usage error, 2 infeasible set or deadline miss,
3 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .experiment import ExperimentConfig, default_workers, run_experiment, summarize, write_csv
from .flownet import NetworkTooLarge, build_full_horizon
from .mcmf import is_complete, max_flow
from .sim import SchedulingError, make_scheduler, run
from .taskgen import GenConfig, GenerationError, gen_taskset
from .tasks import CONTINUOUS, DISCRETE, TaskSetError, format_taskset, load_taskset

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("fnsched")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load(path: str):
    try:
        return load_taskset(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except TaskSetError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_simulate(args) -> int:
    ts = _load(args.taskset)
    if args.scheduler == "fnedf" and args.model is None:
        raise UsageError("--model is required for fnedf")
    if args.scheduler == "bf" and args.model == CONTINUOUS:
        raise UsageError("bf runs on the discrete model only")
    if not ts.tasks:
        print("empty task set: nothing to schedule")
        return EXIT_OK
    if not ts.is_schedulable():
        print(f"rejected: utilization {ts.utilization} exceeds {ts.processors} processors",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    sched = make_scheduler(args.scheduler, args.model)
    trace = open(args.trace, "w") if args.trace else None
    try:
        rep = run(ts, sched, args.horizon, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    print(rep.summary())
    for miss in rep.deadline_misses:
        print(f"miss: task {miss.task_id} job {miss.job_index} short by {miss.remaining}")
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(procs=tuple(args.procs), ratios=tuple(args.ratio), sets=args.sets,
                           seed=args.seed, hyperperiod_cap=args.cap,
                           continuous=args.continuous, timing=args.timing)
    workers = args.workers if args.workers is not None else default_workers()
    rows = run_experiment(cfg, workers)
    if args.out == "-":
        write_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    failed = sum(r.deadline_misses != 0 for r in rows)
    for (m, n), s in summarize([r.as_dict() for r in rows]).items():
        log.info("M=%d N=%d sets=%d preempt/job bf=%.3f fnedf=%.3f ratio=%.3f "
                 "migrate/job bf=%.3f fnedf=%.3f", m, n, s["sets"], s["bf_preempt"],
                 s["fn_preempt"], s["ratio"], s["bf_migrate"], s["fn_migrate"])
    if failed:
        log.warning("%d runs missed deadlines or failed", failed)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    cfg = GenConfig(args.procs, args.tasks, args.period_lo, args.period_hi,
                    utilization=args.util, hyperperiod_cap=args.cap)
    try:
        sets = [gen_taskset(cfg, rng) for _ in range(args.count)]
    except GenerationError as exc:
        raise UsageError(str(exc)) from None
    if args.out is None:
        for i, ts in enumerate(sets):
            if i:
                sys.stdout.write("\n")
            sys.stdout.write(format_taskset(ts))
        return EXIT_OK
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, ts in enumerate(sets):
        (out / f"set{i:04d}.txt").write_text(format_taskset(ts))
    print(f"wrote {len(sets)} task sets to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ts = _load(args.taskset)
    if not ts.tasks:
        print("feasible (empty task set)")
        return EXIT_OK
    try:
        net = build_full_horizon(ts, args.max_nodes)
    except NetworkTooLarge as exc:
        raise UsageError(f"{exc}; try a task set with a smaller hyperperiod") from None
    result = max_flow(net)
    if is_complete(net, result):
        print(f"feasible: flow {result.total} = demand {net.demand} over [0, {ts.hyperperiod}]")
        return EXIT_OK
    print(f"infeasible: flow {result.total} < demand {net.demand} over [0, {ts.hyperperiod}]")
    return EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fnsched", description="Flow-network scheduling of periodic tasks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate one task set over its hyperperiod")
    s.add_argument("taskset")
    s.add_argument("--scheduler", choices=("fnedf", "bf"), default="fnedf")
    s.add_argument("--model", choices=(CONTINUOUS, DISCRETE))
    s.add_argument("--horizon", type=int, default=None, help="default: hyperperiod")
    s.add_argument("--trace", metavar="FILE", help="write 'start end proc task job' lines")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="compare fn-EDF (discrete) with BF on random sets")
    e.add_argument("--procs", type=int, nargs="+", default=[2, 4, 6, 8])
    e.add_argument("--ratio", nargs="+", default=["2", "2.5", "3", "3.5", "4"],
                   help="tasks per processor")
    e.add_argument("--sets", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--cap", type=int, default=600_000, help="hyperperiod cap")
    e.add_argument("--out", default="-")
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--continuous", action="store_true", help="also run continuous fn-EDF")
    e.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("generate", help="write random task sets")
    g.add_argument("--procs", type=int, required=True)
    g.add_argument("--tasks", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--util", type=Fraction, default=None)
    g.add_argument("--period-lo", type=int, default=5)
    g.add_argument("--period-hi", type=int, default=20)
    g.add_argument("--cap", type=int, default=600_000)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", help="directory (default: stdout)")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="feasibility via the full-hyperperiod flow network")
    v.add_argument("taskset")
    v.add_argument("--max-nodes", type=int, default=50_000)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"fnsched: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TaskSetError as exc:
        print(f"fnsched: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SchedulingError as exc:
        print(f"fnsched: scheduler failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"fnsched: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
