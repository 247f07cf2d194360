"""Shared test helpers: book builders and independent clearing oracles.

The oracles here re-derive the expected results along a different path than
the implementation: clearing by exhaustive candidate-depth enumeration and
burden allocation by a closed-form water-fill level, instead of the
engine's prefix scan and iterative redistribution.
"""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import settings

from gridp2p.core import Order, OrderSide
from gridp2p.auction import OrderBook

settings.register_profile("gridp2p", deadline=None)
settings.load_profile("gridp2p")


def ask(pid: str, price: float, qty: float) -> Order:
    return Order(pid, price, qty, OrderSide.ASK)


def bid(pid: str, price: float, qty: float) -> Order:
    return Order(pid, price, qty, OrderSide.BID)


def book(asks, bids, slot: int = 0) -> OrderBook:
    return OrderBook(asks=tuple(asks), bids=tuple(bids), slot=slot)


def random_book(rng: random.Random, max_side: int = 5, prices=(10.0, 12.0, 14.0), quantities=(1.0, 2.0, 3.0)) -> OrderBook:
    n_asks = rng.randint(0, max_side)
    n_bids = rng.randint(0, max_side)
    return book(
        [ask(f"s{i}", rng.choice(prices), rng.choice(quantities)) for i in range(n_asks)],
        [bid(f"b{i}", rng.choice(prices), rng.choice(quantities)) for i in range(n_bids)],
    )


def oracle_trading_sets(asks, bids):
    """Deepest feasible prefix, found by checking every candidate depth."""
    asks_sorted = sorted(asks, key=lambda o: (o.price, -o.quantity, o.prosumer_id))
    bids_sorted = sorted(bids, key=lambda o: (-o.price, -o.quantity, o.prosumer_id))
    feasible = [
        k
        for k in range(1, min(len(asks_sorted), len(bids_sorted)) + 1)
        if all(asks_sorted[i].price <= bids_sorted[i].price for i in range(k))
    ]
    if not feasible:
        return None
    k = max(feasible)
    return asks_sorted[:k], bids_sorted[:k]


def oracle_price(trading_asks, vickrey: bool) -> float:
    prices = sorted(o.price for o in trading_asks)
    if vickrey and len(prices) >= 2:
        return prices[-2]
    return prices[-1]


def oracle_allocate(supplies, demands):
    """Water-fill allocation: a single burden level, clipped sellers below it.

    Solves sum(max(s_i - level, 0)) = total demand directly instead of
    iterating, and fills buyers pro-rata when supply is short.
    """
    supplies = [Fraction(s) for s in supplies]
    demands = [Fraction(d) for d in demands]
    total_supply = sum(supplies)
    total_demand = sum(demands)
    if not supplies or not demands:
        return [Fraction(0)] * len(supplies), [Fraction(0)] * len(demands)
    if total_supply <= total_demand:
        ratio = total_supply / total_demand
        return list(supplies), [d * ratio for d in demands]

    order = sorted(range(len(supplies)), key=lambda i: supplies[i])
    cleared = [Fraction(0)] * len(supplies)
    for first_active in range(len(order)):
        active = order[first_active:]
        level = (sum(supplies[i] for i in active) - total_demand) / len(active)
        clipped_max = supplies[order[first_active - 1]] if first_active else Fraction(0)
        if level >= clipped_max and all(supplies[i] >= level for i in active):
            for i in active:
                cleared[i] = supplies[i] - level
            break
    assert sum(cleared) == total_demand
    return cleared, list(demands)
