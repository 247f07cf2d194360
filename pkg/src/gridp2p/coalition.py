"""Coalition formation, mid-market trading and partition stability.

At a peak slot the prosumers split into two groups: those the auction
cleared, who trade at the auction price, and everyone else, who trade with
each other at the mid-market price (the midpoint of auction price and
feed-in tariff, with a network fee on the buyer side). Imbalances inside the
mid-market group fall back to the grid (surplus, at the feed-in tariff) or a
third-party source (deficit, at a fixed price).

``check_dhp_stability`` then asks whether any prosumer, or any small group
allowed to regroup, could do strictly better by walking away. Auction
participants are committed by the clearing mechanism, so their only unilateral
moves are the non-cooperative ones: buy from the grid at the announced peak
price, or from the third party. Mid-market members can additionally leave to
form their own side market (alone or in pairs) at the same mid-market terms.
A deviation counts as a counterexample only if every prosumer in it strictly
gains.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .auction import AuctionOutcome
from .core import DomainError
from .prosumer import position_value

GRID_ID = "grid"
THIRD_PARTY_ID = "third_party"


class Venue(Enum):
    AUCTION = "auction"
    MID_MARKET = "mid_market"
    GRID = "grid"
    THIRD_PARTY = "third_party"


@dataclass(frozen=True)
class Trade:
    """A settled energy transfer between two parties.

    Prices are exact rationals so that per-trade fee and conservation
    identities hold exactly; ``buyer_price`` differs from ``seller_price``
    only by the mid-market network fee.
    """

    seller_id: str
    buyer_id: str
    quantity: Fraction
    seller_price: Fraction
    buyer_price: Fraction
    venue: Venue

    def __post_init__(self) -> None:
        if self.quantity <= 0:
            raise DomainError("trade quantity must be > 0")
        if self.venue is Venue.MID_MARKET:
            if self.buyer_price < self.seller_price:
                raise DomainError("mid-market buyer price cannot undercut the seller price")
        elif self.buyer_price != self.seller_price:
            raise DomainError(f"{self.venue.value} trades settle at a single price")

    @property
    def payment(self) -> Fraction:
        return self.buyer_price * self.quantity

    @property
    def receipt(self) -> Fraction:
        return self.seller_price * self.quantity

    @property
    def fee(self) -> Fraction:
        return self.payment - self.receipt


@dataclass(frozen=True)
class CoalitionStructure:
    """The two-coalition partition of the active prosumers at one slot."""

    slot: int
    auction_members: tuple[str, ...]
    midmarket_members: tuple[str, ...]
    outcome: AuctionOutcome
    midmarket_trades: tuple[Trade, ...] = ()

    def with_trades(self, trades: Iterable[Trade]) -> "CoalitionStructure":
        return replace(self, midmarket_trades=tuple(trades))


def mid_market_prices(p_auc: float, p_fit: float, beta: float) -> tuple[float, float]:
    """Selling and buying price for the mid-market coalition.

    Sellers receive the midpoint of the auction price and the feed-in
    tariff; buyers pay the same plus a fractional network fee ``beta``.
    """
    if p_auc < 0 or p_fit < 0:
        raise DomainError("prices must be >= 0")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    sell = (p_auc + p_fit) / 2.0
    return sell, (1.0 + beta) * sell


def partition(active: Sequence[str], outcome: AuctionOutcome, slot: int = 0) -> CoalitionStructure:
    """Split the active prosumers into the auction and mid-market coalitions."""
    trading = set(outcome.trading_sellers) | set(outcome.trading_buyers)
    stray = trading - set(active)
    if stray:
        raise DomainError(f"auction outcome references inactive prosumer {sorted(stray)[0]!r}")
    return CoalitionStructure(
        slot=slot,
        auction_members=tuple(pid for pid in active if pid in trading),
        midmarket_members=tuple(pid for pid in active if pid not in trading),
        outcome=outcome,
    )


def _fee_price(sell: Fraction, beta: float) -> Fraction:
    return sell * (1 + Fraction(beta))


def match_midmarket(
    sellers: Sequence[tuple[str, Fraction]],
    buyers: Sequence[tuple[str, Fraction]],
    mid_sell: float,
    beta: float,
    fit_price: float,
    third_party_price: float,
) -> list[Trade]:
    """Match mid-market surplus against deficit pro-rata and route residuals.

    Every seller's quantity is spread over the buyers in proportion to their
    demands (and vice versa), so the matched total is the smaller of total
    surplus and total deficit, exactly. Leftover surplus is sold to the grid
    at the feed-in tariff; leftover deficit is bought from the third party.
    """
    sellers = [(pid, Fraction(q)) for pid, q in sellers]
    buyers = [(pid, Fraction(q)) for pid, q in buyers]
    if any(q <= 0 for _, q in sellers) or any(q <= 0 for _, q in buyers):
        raise DomainError("mid-market quantities must be > 0")

    supply = sum((q for _, q in sellers), Fraction(0))
    demand = sum((q for _, q in buyers), Fraction(0))
    matched = min(supply, demand)

    sell_f = Fraction(mid_sell)
    buy_f = _fee_price(sell_f, beta)
    fit_f = Fraction(fit_price)
    third_f = Fraction(third_party_price)

    trades: list[Trade] = []
    if matched > 0:
        for sid, s_qty in sellers:
            seller_share = s_qty * matched / supply
            for bid, b_qty in buyers:
                q = seller_share * b_qty / demand
                if q > 0:
                    trades.append(Trade(sid, bid, q, sell_f, buy_f, Venue.MID_MARKET))
    for sid, s_qty in sellers:
        residual = s_qty - (s_qty * matched / supply if supply > 0 else Fraction(0))
        if residual > 0:
            trades.append(Trade(sid, GRID_ID, residual, fit_f, fit_f, Venue.GRID))
    for bid, b_qty in buyers:
        residual = b_qty - (b_qty * matched / demand if demand > 0 else Fraction(0))
        if residual > 0:
            trades.append(Trade(THIRD_PARTY_ID, bid, residual, third_f, third_f, Venue.THIRD_PARTY))
    return trades


# --- Stability ---------------------------------------------------------------


@dataclass(frozen=True)
class StabilityContext:
    """Everything needed to price a deviation from the formed structure."""

    alpha: Mapping[str, float]
    surplus: Mapping[str, Fraction]
    deficit: Mapping[str, Fraction]
    grid_selling_price: float
    fit_price: float
    third_party_price: float
    mid_sell: float
    mid_buy: float
    utilities: Mapping[str, float]


@dataclass(frozen=True)
class Deviation:
    """A candidate defection and the utilities it would produce."""

    kind: str
    members: tuple[str, ...]
    utility_before: tuple[float, ...]
    utility_after: tuple[float, ...]


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    witness: Deviation | None = None


_GAIN_EPS = 1e-9


def _alone_utility(ctx: StabilityContext, pid: str, buy_price: float) -> float:
    """Settled utility of meeting one's whole position outside the structure."""
    if pid in ctx.surplus:
        qty = float(ctx.surplus[pid])
        return position_value(ctx.alpha[pid], qty, ctx.fit_price * qty)
    qty = float(ctx.deficit[pid])
    return position_value(ctx.alpha[pid], qty, -buy_price * qty)


def _split_utilities(ctx: StabilityContext, members: Sequence[str]) -> dict[str, float]:
    """Utilities of a breakaway group trading at mid-market terms.

    The group matches internally exactly like the mid-market coalition:
    pro-rata up to the smaller side, surplus residual to the grid, deficit
    residual to the third party.
    """
    sellers = [(pid, ctx.surplus[pid]) for pid in members if pid in ctx.surplus]
    buyers = [(pid, ctx.deficit[pid]) for pid in members if pid in ctx.deficit]
    supply = sum((q for _, q in sellers), Fraction(0))
    demand = sum((q for _, q in buyers), Fraction(0))
    matched = min(supply, demand)

    result: dict[str, float] = {}
    for pid, qty in sellers:
        m = float(qty * matched / supply) if supply > 0 else 0.0
        cash = ctx.mid_sell * m + ctx.fit_price * (float(qty) - m)
        result[pid] = position_value(ctx.alpha[pid], float(qty), cash)
    for pid, qty in buyers:
        m = float(qty * matched / demand) if demand > 0 else 0.0
        cash = ctx.mid_buy * m + ctx.third_party_price * (float(qty) - m)
        result[pid] = position_value(ctx.alpha[pid], float(qty), -cash)
    return result


def _admissible(ctx: StabilityContext, after: Mapping[str, float]) -> bool:
    return all(after[pid] > ctx.utilities[pid] + _GAIN_EPS for pid in after)


def check_dhp_stability(
    structure: CoalitionStructure, ctx: StabilityContext
) -> StabilityVerdict:
    """Search the feasible deviations for one that strictly helps everyone in it.

    Enumerated, in deterministic order: every active prosumer acting alone
    through the grid at the announced peak price, every buyer acting alone
    through the third party, and (for instances of at most 12 prosumers)
    every singleton and pair of mid-market members regrouping into a fresh
    side market. The first deviation in which each deviator strictly gains is
    returned as the witness; if none exists the structure is stable.
    """
    members = list(structure.auction_members) + list(structure.midmarket_members)

    def witness(kind: str, group: Sequence[str], after: Mapping[str, float]) -> StabilityVerdict:
        return StabilityVerdict(
            stable=False,
            witness=Deviation(
                kind=kind,
                members=tuple(group),
                utility_before=tuple(ctx.utilities[p] for p in group),
                utility_after=tuple(after[p] for p in group),
            ),
        )

    for pid in members:
        after = {pid: _alone_utility(ctx, pid, ctx.grid_selling_price)}
        if _admissible(ctx, after):
            return witness("grid_alone", (pid,), after)
        if pid in ctx.deficit:
            after = {pid: _alone_utility(ctx, pid, ctx.third_party_price)}
            if _admissible(ctx, after):
                return witness("third_party_alone", (pid,), after)

    if len(members) <= 12:
        mids = list(structure.midmarket_members)
        for i, pid in enumerate(mids):
            after = _split_utilities(ctx, (pid,))
            if _admissible(ctx, after):
                return witness("midmarket_split", (pid,), after)
            for qid in mids[i + 1 :]:
                after = _split_utilities(ctx, (pid, qid))
                if _admissible(ctx, after):
                    return witness("midmarket_split", (pid, qid), after)

    return StabilityVerdict(stable=True)
