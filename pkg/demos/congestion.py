"""Track a shortest-path objective through a congestion episode.

Bottleneck arcs (the most used 5%) slow down between rounds 12 and 36.
The script prints the per-round solution error of MWU so the spike and
the recovery are visible.

    python3 demos/congestion.py [--kind gradual|abrupt] [--grid 15]
"""

import argparse

from objlearn.experiments import CongestionSchedule, SpGenConfig, learner_factory, run_replicated


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=("none", "gradual", "abrupt"), default="abrupt")
    ap.add_argument("--grid", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = SpGenConfig(T=60, schedule=CongestionSchedule(args.kind), seed=args.seed,
                      grid_rows=args.grid, grid_cols=args.grid)
    run = run_replicated(cfg, learner_factory(cfg, "mwu"), (1, 12, 24, 36, 48, 60))
    led = run.ledgers[0]
    sol, avg = led.solution_errors, led.avg_solution
    print(" round  solution_error  running_avg")
    for t in range(len(led)):
        mark = " *" if 12 <= t + 1 <= 36 else ""
        print(f"{t + 1:6d}  {sol[t] + 0.0:14.6g}  {avg[t]:11.6g}{mark}")
    print(f"mismatches: {led.mismatch_count} of {len(led)}   (* = congested round)")


if __name__ == "__main__":
    main()
