"""Run the seeded residential case study and print the headline numbers.

Usage:
    python scripts/run_case_study.py [--seed 42] [--out runs/case42]
"""

import argparse

from gridp2p.core import make_case_study_scenario
from gridp2p.engine import baseline_grid_only, baseline_third_party, compare, run_horizon
from gridp2p.reports import write_run, write_summary


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", help="optionally write the CSV reports here")
    args = parser.parse_args()

    scenario = make_case_study_scenario(args.seed)
    p2p = run_horizon(scenario)
    grid_only = baseline_grid_only(scenario)
    third_party = baseline_third_party(scenario)
    metrics = compare(p2p, grid_only, third_party)

    peaks = [s for s in p2p.slots if s.price_signal.peak_flag]
    offpeak_price = scenario.grid.offpeak_price
    print(f"scenario: seed={args.seed}, {len(scenario.prosumers)} prosumers, {scenario.slots} slots")
    print(f"peak slots: {[s.slot for s in peaks]}")
    for s in peaks:
        multiple = s.price_signal.selling_price / offpeak_price
        n_auction = len(s.structure.auction_members)
        n_mid = len(s.structure.midmarket_members)
        price = s.structure.outcome.auction_price
        print(
            f"  slot {s.slot:2d}: punitive price {s.price_signal.selling_price:7.1f} c/kWh"
            f" ({multiple:4.1f}x off-peak), auction price {price}, coalitions {n_auction}/{n_mid},"
            f" cps cost {s.cps_cost:.1f}"
        )
    print(f"cps peak cost with peer trading:    {metrics.cps_cost_with_p2p:12.2f} cents")
    print(f"cps peak cost without peer trading: {metrics.cps_cost_without_p2p:12.2f} cents")
    print(f"avg seller revenue uplift vs FiT:   {metrics.avg_seller_uplift_pct:12.2f} %")
    print(f"avg buyer saving vs grid-only:      {metrics.avg_buyer_savings_vs_grid_pct:12.2f} %")
    print(f"avg buyer saving vs third party:    {metrics.avg_buyer_savings_vs_third_party_pct:12.2f} %")

    if args.out:
        write_run(p2p, args.out)
        write_summary(metrics, args.out)
        print(f"reports written to {args.out}")


if __name__ == "__main__":
    main()
