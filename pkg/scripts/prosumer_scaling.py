"""Sweep the prosumer count and tabulate system cost with and without peer trading.

The grid threshold schedule is held at the 12-prosumer level so that a larger
fleet overshoots it further, which is what drives the no-participation cost up.

Usage:
    python scripts/prosumer_scaling.py [--seed 0] [--slots 10]
"""

import argparse
from dataclasses import replace

from gridp2p.core import make_case_study_scenario
from gridp2p.engine import baseline_grid_only, baseline_third_party, compare, run_horizon


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--slots", type=int, default=10)
    parser.add_argument("--counts", type=int, nargs="+", default=[12, 24, 36, 48])
    args = parser.parse_args()

    base = make_case_study_scenario(args.seed, n_prosumers=12, slots=args.slots)
    header = f"{'N':>4} {'cps cost p2p':>14} {'cps cost no-p2p':>16} {'cost/prosumer p2p':>18} {'cost/prosumer no-p2p':>21}"
    print(header)
    print("-" * len(header))
    for n in args.counts:
        scenario = make_case_study_scenario(args.seed, n_prosumers=n, slots=args.slots)
        scenario = replace(scenario, grid=replace(scenario.grid, threshold=base.grid.threshold))
        metrics = compare(
            run_horizon(scenario),
            baseline_grid_only(scenario),
            baseline_third_party(scenario),
        )
        print(
            f"{n:>4} {metrics.cps_cost_with_p2p:>14.2f} {metrics.cps_cost_without_p2p:>16.2f}"
            f" {metrics.avg_cost_per_prosumer_p2p:>18.2f} {metrics.avg_cost_per_prosumer_grid_only:>21.2f}"
        )


if __name__ == "__main__":
    main()
