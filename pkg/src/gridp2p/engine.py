"""Horizon orchestration: per-slot runs, settlement, baselines and metrics.

``run_slot`` plays one slot end to end: the system announces its price, and
at a peak the prosumers clear a double auction, split into the two
coalitions, trade, and route residuals. Two baselines replay the same
horizon without peer trading (everything through the grid, or deficits
through the third party), and ``compare`` distills the three runs into the
cost and revenue metrics of interest.

Cash amounts are exact rationals throughout; floats appear only in utilities
and in emitted reports.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Iterable, Mapping, Sequence

from .auction import AuctionOutcome, OrderBook, clear
from .coalition import (
    GRID_ID,
    THIRD_PARTY_ID,
    CoalitionStructure,
    StabilityContext,
    Trade,
    Venue,
    match_midmarket,
    mid_market_prices,
    partition,
)
from .core import DomainError, Order, OrderSide, Scenario
from .leader import PriceSignal, cps_cost, decide_slot_price, total_prosumer_demand
from .prosumer import position_value

log = logging.getLogger("gridp2p.engine")

MODE_P2P = "p2p"
MODE_GRID_ONLY = "grid-only"
MODE_THIRD_PARTY = "third-party"


@dataclass(frozen=True)
class ProsumerSlot:
    """One prosumer's settled slot: utility, cash flows and primary venue."""

    utility: float
    revenue: Fraction
    cost: Fraction
    venue: str


@dataclass(frozen=True)
class SlotResult:
    slot: int
    price_signal: PriceSignal
    structure: CoalitionStructure | None
    trades: tuple[Trade, ...]
    cps_cost: float
    per_prosumer: dict[str, ProsumerSlot]


@dataclass(frozen=True)
class ReportAggregates:
    cps_cost_total: float
    cps_cost_peak: float
    peak_slots: tuple[int, ...]
    seller_revenue_peak: dict[str, Fraction]
    buyer_cost_peak: dict[str, Fraction]
    seller_revenue_total: dict[str, Fraction]
    buyer_cost_total: dict[str, Fraction]


@dataclass(frozen=True)
class SimulationReport:
    scenario: Scenario
    mode: str
    slots: tuple[SlotResult, ...]
    aggregates: ReportAggregates


def _effective_auction_price(outcome: AuctionOutcome, fit_price: float) -> float:
    # With no intersection there is no auction price; the mid-market formula
    # then degenerates to the feed-in tariff as its floor.
    return outcome.auction_price if outcome.auction_price is not None else fit_price


def _settle(
    scenario: Scenario,
    slot: int,
    trades: Sequence[Trade],
    venue_of: Mapping[str, str],
) -> dict[str, ProsumerSlot]:
    energy: dict[str, Fraction] = {}
    cash: dict[str, Fraction] = {}
    revenue: dict[str, Fraction] = {}
    cost: dict[str, Fraction] = {}
    for t in trades:
        if t.seller_id not in (GRID_ID, THIRD_PARTY_ID):
            energy[t.seller_id] = energy.get(t.seller_id, Fraction(0)) + t.quantity
            revenue[t.seller_id] = revenue.get(t.seller_id, Fraction(0)) + t.receipt
            cash[t.seller_id] = cash.get(t.seller_id, Fraction(0)) + t.receipt
        if t.buyer_id not in (GRID_ID, THIRD_PARTY_ID):
            energy[t.buyer_id] = energy.get(t.buyer_id, Fraction(0)) + t.quantity
            cost[t.buyer_id] = cost.get(t.buyer_id, Fraction(0)) + t.payment
            cash[t.buyer_id] = cash.get(t.buyer_id, Fraction(0)) - t.payment

    result: dict[str, ProsumerSlot] = {}
    for p in scenario.prosumers:
        pid = p.id
        if pid in energy:
            utility = position_value(
                p.alpha_at(slot), float(energy[pid]), float(cash.get(pid, Fraction(0)))
            )
        else:
            utility = 0.0
        result[pid] = ProsumerSlot(
            utility=utility,
            revenue=revenue.get(pid, Fraction(0)),
            cost=cost.get(pid, Fraction(0)),
            venue=venue_of.get(pid, "none"),
        )
    return result


def _grid_slot_trades(
    scenario: Scenario, slot: int, buying_price: float
) -> tuple[list[Trade], dict[str, str]]:
    """Everyone trades with the grid: buyers at ``buying_price``, sellers at FiT."""
    fit = Fraction(scenario.grid.fit_price)
    price = Fraction(buying_price)
    trades: list[Trade] = []
    venues: dict[str, str] = {}
    for p in scenario.prosumers:
        net = p.net_energy[slot]
        if net > 0:
            trades.append(Trade(p.id, GRID_ID, Fraction(net), fit, fit, Venue.GRID))
            venues[p.id] = Venue.GRID.value
        elif net < 0:
            trades.append(Trade(GRID_ID, p.id, Fraction(-net), price, price, Venue.GRID))
            venues[p.id] = Venue.GRID.value
    return trades, venues


def _auction_trades(outcome: AuctionOutcome, fit_price: float, third_party_price: float) -> list[Trade]:
    """Pair cleared quantities pro-rata and route the auction residuals.

    Unsold burden goes to the grid at the feed-in tariff; unmet buyer demand
    is covered by the third party.
    """
    trades: list[Trade] = []
    total = outcome.total_cleared
    price = Fraction(outcome.auction_price)
    fit = Fraction(fit_price)
    third = Fraction(third_party_price)
    if total > 0:
        for sf in outcome.seller_fills:
            if sf.cleared == 0:
                continue
            for bf in outcome.buyer_fills:
                q = sf.cleared * bf.cleared / total
                if q > 0:
                    trades.append(Trade(sf.prosumer_id, bf.prosumer_id, q, price, price, Venue.AUCTION))
    for sf in outcome.seller_fills:
        if sf.unfilled > 0:
            trades.append(Trade(sf.prosumer_id, GRID_ID, sf.unfilled, fit, fit, Venue.GRID))
    for bf in outcome.buyer_fills:
        if bf.unfilled > 0:
            trades.append(Trade(THIRD_PARTY_ID, bf.prosumer_id, bf.unfilled, third, third, Venue.THIRD_PARTY))
    return trades


def run_slot(scenario: Scenario, slot: int) -> SlotResult:
    """Simulate one slot of the peer-trading scheme."""
    if not 0 <= slot < scenario.slots:
        raise DomainError(f"slot {slot} out of range")
    grid = scenario.grid
    market = scenario.market
    signal = decide_slot_price(grid, scenario.prosumers, slot)
    e_d = total_prosumer_demand(scenario.prosumers, slot)

    if not signal.peak_flag:
        trades, venues = _grid_slot_trades(scenario, slot, signal.selling_price)
        cost = cps_cost(grid.a, grid.b, e_d, grid.threshold[slot], signal.selling_price)
        return SlotResult(
            slot=slot,
            price_signal=signal,
            structure=None,
            trades=tuple(trades),
            cps_cost=cost,
            per_prosumer=_settle(scenario, slot, trades, venues),
        )

    sellers = scenario.sellers_at(slot)
    buyers = scenario.buyers_at(slot)
    book = OrderBook(
        asks=tuple(
            Order(p.id, p.reservation_price[slot], p.net_energy[slot], OrderSide.ASK)
            for p in sellers
        ),
        bids=tuple(
            Order(p.id, p.bid_price[slot], -p.net_energy[slot], OrderSide.BID)
            for p in buyers
        ),
        slot=slot,
    )
    outcome = clear(book, market.auction_price_rule)
    active = [p.id for p in scenario.prosumers if p.net_energy[slot] != 0]
    structure = partition(active, outcome, slot)

    mid_sell, _ = mid_market_prices(
        _effective_auction_price(outcome, grid.fit_price), grid.fit_price, market.beta
    )
    mid_ids = set(structure.midmarket_members)
    mid_trades = match_midmarket(
        sellers=[(p.id, Fraction(p.net_energy[slot])) for p in sellers if p.id in mid_ids],
        buyers=[(p.id, Fraction(-p.net_energy[slot])) for p in buyers if p.id in mid_ids],
        mid_sell=mid_sell,
        beta=market.beta,
        fit_price=grid.fit_price,
        third_party_price=market.third_party_price,
    )
    structure = structure.with_trades(mid_trades)

    trades: list[Trade] = []
    if not outcome.is_empty:
        trades.extend(_auction_trades(outcome, grid.fit_price, market.third_party_price))
    trades.extend(mid_trades)

    venues = {pid: Venue.AUCTION.value for pid in structure.auction_members}
    venues.update({pid: Venue.MID_MARKET.value for pid in structure.midmarket_members})

    # No prosumer buys from the system at the peak, so delivered demand is
    # zero and the slot costs the system exactly nothing.
    cost = cps_cost(grid.a, grid.b, 0.0, grid.threshold[slot], signal.selling_price)
    return SlotResult(
        slot=slot,
        price_signal=signal,
        structure=structure,
        trades=tuple(trades),
        cps_cost=cost,
        per_prosumer=_settle(scenario, slot, trades, venues),
    )


def _baseline_slot(scenario: Scenario, slot: int, mode: str) -> SlotResult:
    grid = scenario.grid
    signal = decide_slot_price(grid, scenario.prosumers, slot)
    e_d = total_prosumer_demand(scenario.prosumers, slot)

    if not signal.peak_flag:
        trades, venues = _grid_slot_trades(scenario, slot, signal.selling_price)
        cost = cps_cost(grid.a, grid.b, e_d, grid.threshold[slot], signal.selling_price)
    elif mode == MODE_GRID_ONLY:
        trades, venues = _grid_slot_trades(scenario, slot, signal.selling_price)
        # The punitive price is a deterrent, not a revenue stream: the cost
        # booked against the slot is the uncredited overage of serving the
        # full demand beyond the threshold.
        cost = cps_cost(grid.a, grid.b, e_d, grid.threshold[slot], 0.0)
    else:
        fit = Fraction(grid.fit_price)
        third = Fraction(scenario.market.third_party_price)
        trades = []
        venues = {}
        for p in scenario.prosumers:
            net = p.net_energy[slot]
            if net > 0:
                trades.append(Trade(p.id, GRID_ID, Fraction(net), fit, fit, Venue.GRID))
                venues[p.id] = Venue.GRID.value
            elif net < 0:
                trades.append(
                    Trade(THIRD_PARTY_ID, p.id, Fraction(-net), third, third, Venue.THIRD_PARTY)
                )
                venues[p.id] = Venue.THIRD_PARTY.value
        cost = cps_cost(grid.a, grid.b, 0.0, grid.threshold[slot], signal.selling_price)

    return SlotResult(
        slot=slot,
        price_signal=signal,
        structure=None,
        trades=tuple(trades),
        cps_cost=cost,
        per_prosumer=_settle(scenario, slot, trades, venues),
    )


def aggregate_slots(scenario: Scenario, slots: Sequence[SlotResult]) -> ReportAggregates:
    ids = [p.id for p in scenario.prosumers]
    zero = {pid: Fraction(0) for pid in ids}
    rev_peak = dict(zero)
    cost_peak = dict(zero)
    rev_total = dict(zero)
    cost_total = dict(zero)
    peak_slots = []
    cps_total = 0.0
    cps_peak = 0.0
    for s in slots:
        cps_total += s.cps_cost
        if s.price_signal.peak_flag:
            peak_slots.append(s.slot)
            cps_peak += s.cps_cost
        for pid in ids:
            ps = s.per_prosumer[pid]
            rev_total[pid] += ps.revenue
            cost_total[pid] += ps.cost
            if s.price_signal.peak_flag:
                rev_peak[pid] += ps.revenue
                cost_peak[pid] += ps.cost
    return ReportAggregates(
        cps_cost_total=cps_total,
        cps_cost_peak=cps_peak,
        peak_slots=tuple(peak_slots),
        seller_revenue_peak=rev_peak,
        buyer_cost_peak=cost_peak,
        seller_revenue_total=rev_total,
        buyer_cost_total=cost_total,
    )


def _run(scenario: Scenario, mode: str, jobs: int = 1) -> SimulationReport:
    if mode == MODE_P2P:
        slot_fn = partial(run_slot, scenario)
    else:
        slot_fn = partial(_baseline_slot, scenario, mode=mode)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            slots = tuple(pool.map(slot_fn, range(scenario.slots)))
    else:
        slots = tuple(slot_fn(t) for t in range(scenario.slots))
    log.debug("mode=%s slots=%d peak=%d", mode, len(slots), sum(s.price_signal.peak_flag for s in slots))
    return SimulationReport(
        scenario=scenario,
        mode=mode,
        slots=slots,
        aggregates=aggregate_slots(scenario, slots),
    )


def run_horizon(scenario: Scenario, jobs: int = 1) -> SimulationReport:
    """Run the peer-trading scheme over the whole horizon."""
    return _run(scenario, MODE_P2P, jobs)


def baseline_grid_only(scenario: Scenario, jobs: int = 1) -> SimulationReport:
    """Replay the horizon with every prosumer trading only with the grid."""
    return _run(scenario, MODE_GRID_ONLY, jobs)


def baseline_third_party(scenario: Scenario, jobs: int = 1) -> SimulationReport:
    """Replay the horizon with peak deficits bought from the third party."""
    return _run(scenario, MODE_THIRD_PARTY, jobs)


def stability_context(scenario: Scenario, result: SlotResult) -> StabilityContext:
    """Assemble the pricing context for a stability check of a peak slot."""
    if result.structure is None:
        raise DomainError("stability is defined for peak slots with a coalition structure")
    slot = result.slot
    grid = scenario.grid
    mid_sell, mid_buy = mid_market_prices(
        _effective_auction_price(result.structure.outcome, grid.fit_price),
        grid.fit_price,
        scenario.market.beta,
    )
    alpha: dict[str, float] = {}
    surplus: dict[str, Fraction] = {}
    deficit: dict[str, Fraction] = {}
    utilities: dict[str, float] = {}
    for p in scenario.prosumers:
        net = p.net_energy[slot]
        if net == 0:
            continue
        alpha[p.id] = p.alpha_at(slot)
        if net > 0:
            surplus[p.id] = Fraction(net)
        else:
            deficit[p.id] = Fraction(-net)
        utilities[p.id] = result.per_prosumer[p.id].utility
    return StabilityContext(
        alpha=alpha,
        surplus=surplus,
        deficit=deficit,
        grid_selling_price=result.price_signal.selling_price,
        fit_price=grid.fit_price,
        third_party_price=scenario.market.third_party_price,
        mid_sell=mid_sell,
        mid_buy=mid_buy,
        utilities=utilities,
    )


@dataclass(frozen=True)
class MetricsTable:
    """Cross-run comparison over the peak slots of the horizon."""

    seller_uplift_pct: dict[str, float]
    buyer_savings_vs_grid_pct: dict[str, float]
    buyer_savings_vs_third_party_pct: dict[str, float]
    buyer_premium_vs_third_party_pct: dict[str, float]
    avg_seller_uplift_pct: float | None
    avg_buyer_savings_vs_grid_pct: float | None
    avg_buyer_savings_vs_third_party_pct: float | None
    avg_buyer_premium_vs_third_party_pct: float | None
    cps_cost_with_p2p: float
    cps_cost_without_p2p: float
    avg_cost_per_prosumer_p2p: float
    avg_cost_per_prosumer_grid_only: float
    avg_cost_per_prosumer_third_party: float

    def rows(self) -> list[tuple[str, str, str]]:
        def fmt(x: float | None) -> str:
            return "" if x is None else f"{x:.6f}"

        out: list[tuple[str, str, str]] = []
        for name, table in (
            ("seller_uplift_pct", self.seller_uplift_pct),
            ("buyer_savings_vs_grid_pct", self.buyer_savings_vs_grid_pct),
            ("buyer_savings_vs_third_party_pct", self.buyer_savings_vs_third_party_pct),
            ("buyer_premium_vs_third_party_pct", self.buyer_premium_vs_third_party_pct),
        ):
            for pid, value in table.items():
                out.append((name, pid, fmt(value)))
        out.append(("seller_uplift_pct", "average", fmt(self.avg_seller_uplift_pct)))
        out.append(("buyer_savings_vs_grid_pct", "average", fmt(self.avg_buyer_savings_vs_grid_pct)))
        out.append(
            (
                "buyer_savings_vs_third_party_pct",
                "average",
                fmt(self.avg_buyer_savings_vs_third_party_pct),
            )
        )
        out.append(
            (
                "buyer_premium_vs_third_party_pct",
                "average",
                fmt(self.avg_buyer_premium_vs_third_party_pct),
            )
        )
        out.append(("cps_cost_with_p2p", "total", fmt(self.cps_cost_with_p2p)))
        out.append(("cps_cost_without_p2p", "total", fmt(self.cps_cost_without_p2p)))
        out.append(("avg_cost_per_prosumer_p2p", "all", fmt(self.avg_cost_per_prosumer_p2p)))
        out.append(
            ("avg_cost_per_prosumer_grid_only", "all", fmt(self.avg_cost_per_prosumer_grid_only))
        )
        out.append(
            ("avg_cost_per_prosumer_third_party", "all", fmt(self.avg_cost_per_prosumer_third_party))
        )
        return out


def _mean(values: Iterable[float]) -> float | None:
    seq = list(values)
    return sum(seq) / len(seq) if seq else None


def compare(
    p2p: SimulationReport, grid_only: SimulationReport, third_party: SimulationReport
) -> MetricsTable:
    """Distill the three runs into the headline metrics.

    Percentages are computed over peak slots only: off-peak settlement is
    identical in every mode, so including it would only dilute the ratios.
    The cost-per-prosumer averages divide by the full prosumer count, buyers
    and sellers alike.
    """
    if p2p.scenario != grid_only.scenario or p2p.scenario != third_party.scenario:
        raise DomainError("compare requires reports over the same scenario")
    if (p2p.mode, grid_only.mode, third_party.mode) != (MODE_P2P, MODE_GRID_ONLY, MODE_THIRD_PARTY):
        raise DomainError("compare requires one report per mode, in order")

    ids = [p.id for p in p2p.scenario.prosumers]
    n = len(ids)
    uplift: dict[str, float] = {}
    savings_grid: dict[str, float] = {}
    savings_tp: dict[str, float] = {}
    premium_tp: dict[str, float] = {}
    for pid in ids:
        base_rev = grid_only.aggregates.seller_revenue_peak[pid]
        p2p_rev = p2p.aggregates.seller_revenue_peak[pid]
        if base_rev > 0:
            uplift[pid] = float((p2p_rev - base_rev) / base_rev) * 100.0
        base_cost = grid_only.aggregates.buyer_cost_peak[pid]
        p2p_cost = p2p.aggregates.buyer_cost_peak[pid]
        tp_cost = third_party.aggregates.buyer_cost_peak[pid]
        if base_cost > 0:
            savings_grid[pid] = float((base_cost - p2p_cost) / base_cost) * 100.0
        if tp_cost > 0:
            savings_tp[pid] = float((tp_cost - p2p_cost) / tp_cost) * 100.0
        if p2p_cost > 0:
            premium_tp[pid] = float((tp_cost - p2p_cost) / p2p_cost) * 100.0

    total_cost = lambda report: sum(report.aggregates.buyer_cost_peak.values(), Fraction(0))
    return MetricsTable(
        seller_uplift_pct=uplift,
        buyer_savings_vs_grid_pct=savings_grid,
        buyer_savings_vs_third_party_pct=savings_tp,
        buyer_premium_vs_third_party_pct=premium_tp,
        avg_seller_uplift_pct=_mean(uplift.values()),
        avg_buyer_savings_vs_grid_pct=_mean(savings_grid.values()),
        avg_buyer_savings_vs_third_party_pct=_mean(savings_tp.values()),
        avg_buyer_premium_vs_third_party_pct=_mean(premium_tp.values()),
        cps_cost_with_p2p=p2p.aggregates.cps_cost_peak,
        cps_cost_without_p2p=grid_only.aggregates.cps_cost_peak,
        avg_cost_per_prosumer_p2p=float(total_cost(p2p)) / n,
        avg_cost_per_prosumer_grid_only=float(total_cost(grid_only)) / n,
        avg_cost_per_prosumer_third_party=float(total_cost(third_party)) / n,
    )
