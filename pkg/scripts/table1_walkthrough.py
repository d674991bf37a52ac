"""Step through the five-task, two-processor example at t = 0 and over [0, 18).

Prints the active job area, both capacity rules, the min-cost flow on the
EDF-costed network, the BF allocation, and each scheduler's dispatched
schedule as one row per processor.
"""
import argparse

from fnsched.bf import BfState, compute_window_capacities_discrete, run_bf
from fnsched.flownet import build_fnrt_edf, job_node, window_node
from fnsched.mcmf import min_cost_max_flow
from fnsched.sim import make_scheduler, run
from fnsched.tasks import (CONTINUOUS, DISCRETE, TaskSet, active_job_area, boundaries,
                           release_jobs, window_capacities_continuous)

PAIRS = [(2, 3), (2, 6), (2, 6), (3, 9), (3, 9)]


def gantt(ts, events, horizon):
    rows = [["."] * horizon for _ in range(ts.processors)]
    for e in events:
        for s in e.segments:
            for x in range(int(s.start), int(s.end)):
                rows[s.processor][x] = str(s.task_id)
    return ["P%d %s" % (i, "".join(r)) for i, r in enumerate(rows)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--processors", type=int, default=2)
    args = p.parse_args()
    ts = TaskSet.from_pairs(PAIRS, args.processors)
    print(f"tasks {PAIRS}, M={ts.processors}, U={ts.utilization}, H={ts.hyperperiod}")

    jobs = release_jobs(ts, 0)
    aja = active_job_area(ts, jobs, 0, CONTINUOUS)
    caps = window_capacities_continuous(aja, ts)
    caps_d = compute_window_capacities_discrete(ts, 0, boundaries(ts, jobs, 0, DISCRETE))
    print("windows", [(w.start, w.end) for w in aja.windows])
    print("capacities continuous", [str(c) for c in caps], "discrete", caps_d)

    net = build_fnrt_edf(aja, caps)
    res = min_cost_max_flow(net)
    print(f"min-cost flow value {res.total}, cost {res.cost}")
    for j in aja.edf_jobs():
        row = [res.flow(job_node(j.task_id), window_node(w.index)) for w in aja.windows]
        print(f"  task {j.task_id}: " + " ".join(str(x) for x in row))
    print("BF first window", run_bf(ts, BfState.initial(ts)))

    for name, model in (("fnedf", CONTINUOUS), ("fnedf", DISCRETE), ("bf", DISCRETE)):
        events = []
        rep = run(ts, make_scheduler(name, model), on_event=events.append)
        print(f"\n{rep.summary()}")
        for line in gantt(ts, events, rep.horizon):
            print(line)


if __name__ == "__main__":
    main()
