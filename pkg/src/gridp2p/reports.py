"""CSV emission for simulation runs, plus the audit re-checker.

One run writes one directory: ``prices.csv``, ``cps_cost.csv``,
``coalitions.csv`` and ``trades.csv``, with ``summary.csv`` added by compare
runs. Headers are fixed, floats carry six decimal places, and rows are
emitted in a deterministic order, so identical runs produce byte-identical
directories.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from pathlib import Path

from .coalition import GRID_ID, Venue
from .engine import MetricsTable, SimulationReport

PRICES_HEADER = ["slot", "selling_price", "peak_flag"]
CPS_COST_HEADER = ["slot", "cps_cost"]
COALITIONS_HEADER = ["slot", "coalition", "member"]
TRADES_HEADER = ["slot", "venue", "seller", "buyer", "qty", "seller_price", "buyer_price"]
SUMMARY_HEADER = ["metric", "scope", "value"]


def _fmt(value: float | Fraction) -> str:
    return f"{float(value):.6f}"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buffer.getvalue())


def write_run(report: SimulationReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    prices = []
    costs = []
    coalitions = []
    trades = []
    for s in report.slots:
        prices.append([str(s.slot), _fmt(s.price_signal.selling_price), str(s.price_signal.peak_flag).lower()])
        costs.append([str(s.slot), _fmt(s.cps_cost)])
        if s.structure is not None:
            for pid in s.structure.auction_members:
                coalitions.append([str(s.slot), "auction", pid])
            for pid in s.structure.midmarket_members:
                coalitions.append([str(s.slot), "mid_market", pid])
        for t in s.trades:
            trades.append(
                [
                    str(s.slot),
                    t.venue.value,
                    t.seller_id,
                    t.buyer_id,
                    _fmt(t.quantity),
                    _fmt(t.seller_price),
                    _fmt(t.buyer_price),
                ]
            )

    _write_csv(out / "prices.csv", PRICES_HEADER, prices)
    _write_csv(out / "cps_cost.csv", CPS_COST_HEADER, costs)
    _write_csv(out / "coalitions.csv", COALITIONS_HEADER, coalitions)
    _write_csv(out / "trades.csv", TRADES_HEADER, trades)


def write_summary(metrics: MetricsTable, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "summary.csv", SUMMARY_HEADER, [list(r) for r in metrics.rows()])


def write_order_dump(report: SimulationReport, out_dir: str | Path) -> None:
    """Optional per-slot dump of the orders implied by the scenario."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    scenario = report.scenario
    for s in report.slots:
        if not s.price_signal.peak_flag:
            continue
        for p in scenario.prosumers:
            net = p.net_energy[s.slot]
            if net > 0:
                rows.append([str(s.slot), p.id, "ask", _fmt(p.reservation_price[s.slot]), _fmt(net)])
            elif net < 0:
                rows.append([str(s.slot), p.id, "bid", _fmt(p.bid_price[s.slot]), _fmt(-net)])
    _write_csv(out / "orders.csv", ["slot", "prosumer", "side", "price", "quantity"], rows)


# --- Audit -------------------------------------------------------------------


def _read_csv(path: Path, header: list[str]) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != header:
        raise ValueError(f"{path.name}: expected header {header}, got {rows[0] if rows else 'nothing'}")
    return [dict(zip(header, row)) for row in rows[1:]]


def audit_run(run_dir: str | Path) -> list[str]:
    """Re-check an emitted run directory; returns a list of problems found.

    Verifies that every CSV parses under its fixed header, that per-slot cash
    flows balance (payments equal receipts plus fees, within the rounding of
    the six-decimal output), that the coalition rows form a partition, that
    trades stay inside their coalition, and that nobody buys from the grid at
    a peak slot.
    """
    run = Path(run_dir)
    problems: list[str] = []
    try:
        prices = _read_csv(run / "prices.csv", PRICES_HEADER)
        costs = _read_csv(run / "cps_cost.csv", CPS_COST_HEADER)
        coalitions = _read_csv(run / "coalitions.csv", COALITIONS_HEADER)
        trades = _read_csv(run / "trades.csv", TRADES_HEADER)
    except (OSError, ValueError) as exc:
        return [str(exc)]

    peak = {row["slot"]: row["peak_flag"] == "true" for row in prices}
    if {row["slot"] for row in costs} != set(peak):
        problems.append("cps_cost.csv and prices.csv cover different slots")

    membership: dict[str, dict[str, str]] = {}
    for row in coalitions:
        slot_members = membership.setdefault(row["slot"], {})
        if row["member"] in slot_members:
            problems.append(
                f"slot {row['slot']}: prosumer {row['member']} appears in more than one coalition"
            )
        slot_members[row["member"]] = row["coalition"]

    balance: dict[str, tuple[float, float, float]] = {}
    for row in trades:
        slot = row["slot"]
        qty = float(row["qty"])
        sell = float(row["seller_price"])
        buy = float(row["buyer_price"])
        if qty <= 0:
            problems.append(f"slot {slot}: non-positive trade quantity {row['qty']}")
        if buy < sell:
            problems.append(f"slot {slot}: buyer price {buy} below seller price {sell}")
        if row["venue"] != Venue.MID_MARKET.value and buy != sell:
            problems.append(f"slot {slot}: {row['venue']} trade with a price spread")
        # A structure for the slot means a peer-trading run, in which nobody
        # may buy from the grid at the peak; baselines emit no coalitions.
        if peak.get(slot) and membership.get(slot) and row["venue"] == Venue.GRID.value and row["seller"] == GRID_ID:
            problems.append(f"slot {slot}: grid sale to {row['buyer']} during a peak slot")
        if row["venue"] in (Venue.AUCTION.value, Venue.MID_MARKET.value):
            members = membership.get(slot, {})
            want = "auction" if row["venue"] == Venue.AUCTION.value else "mid_market"
            for pid in (row["seller"], row["buyer"]):
                if members.get(pid) != want:
                    problems.append(
                        f"slot {slot}: {row['venue']} trade party {pid} not in the {want} coalition"
                    )
        payments, receipts, fees = balance.get(slot, (0.0, 0.0, 0.0))
        balance[slot] = (
            payments + buy * qty,
            receipts + sell * qty,
            fees + (buy - sell) * qty,
        )

    for slot, (payments, receipts, fees) in sorted(balance.items(), key=lambda kv: int(kv[0])):
        if abs(payments - (receipts + fees)) > 1e-2:
            problems.append(
                f"slot {slot}: cash imbalance payments={payments:.6f} receipts+fees={receipts + fees:.6f}"
            )

    summary = run / "summary.csv"
    if summary.exists():
        try:
            _read_csv(summary, SUMMARY_HEADER)
        except ValueError as exc:
            problems.append(str(exc))
    return problems
