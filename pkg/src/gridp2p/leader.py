"""The centralized power system's side of the game: cost and pricing.

Serving prosumer demand beyond the slot threshold costs the system
``a*(overshoot)^2 + b*overshoot`` (reserve activation, extra generation),
offset by sales revenue. Minimizing that cost over delivered demand yields a
closed-form punitive price; as long as ``b`` clears the bound from
``min_b`` the punitive price exceeds every prosumer's willingness to pay, so
peak demand on the system collapses to zero and prosumers trade among
themselves instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import ConfigurationError, DomainError, GridPolicy, ProsumerProfile
from .prosumer import LN2


@dataclass(frozen=True)
class PriceSignal:
    """Prices announced by the system for one slot."""

    slot: int
    selling_price: float
    buying_price: float
    peak_flag: bool


def cps_cost(a: float, b: float, e_d: float, e_t: float, price: float) -> float:
    """Net cost of serving ``e_d`` kWh of prosumer demand at ``price``.

    Only demand beyond the threshold ``e_t`` incurs the quadratic overage
    cost. Negative results are revenue.
    """
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be > 0")
    if e_d < 0:
        raise DomainError("delivered demand must be >= 0")
    if e_t < 0:
        raise DomainError("threshold must be >= 0")
    overshoot = max(e_d - e_t, 0.0)
    return a * overshoot * overshoot + b * overshoot - price * e_d


def peak_price(a: float, b: float, e_d: float, e_t: float) -> float:
    """The cost-minimizing selling price when demand exceeds the threshold."""
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be > 0")
    if e_d <= e_t:
        raise DomainError("peak_price requires e_d > e_t; use the off-peak price otherwise")
    return 2.0 * a * (e_d - e_t) + b


def min_b(a: float, alpha_max: float, e_d: float, e_t: float) -> float:
    """Strict lower bound on ``b`` that prices every prosumer off the grid.

    With ``b`` above this bound the punitive price exceeds the largest
    willingness-to-pay among the prosumers, so nobody buys at the peak.
    """
    if a <= 0:
        raise DomainError("a must be > 0")
    if alpha_max <= 0:
        raise DomainError("alpha_max must be > 0")
    return (alpha_max - 2.0 * a * LN2 * (e_d - e_t)) / LN2


def total_prosumer_demand(prosumers: Sequence[ProsumerProfile], slot: int) -> float:
    """Aggregate deficit of the buying prosumers at ``slot`` (perfect forecast)."""
    return float(sum(-p.net_energy[slot] for p in prosumers if p.net_energy[slot] < 0))


def decide_slot_price(
    policy: GridPolicy, prosumers: Sequence[ProsumerProfile], slot: int
) -> PriceSignal:
    """Announce the slot's prices: off-peak rate, or the punitive peak price.

    The peak branch triggers only on a strict threshold crossing. Before
    announcing a punitive price the configured ``b`` is checked against the
    ``min_b`` bound; a violation means the scenario's parameters cannot
    actually deter grid purchases, which is a configuration error.
    """
    e_d = total_prosumer_demand(prosumers, slot)
    e_t = policy.threshold[slot]
    if e_d <= e_t:
        return PriceSignal(
            slot=slot,
            selling_price=policy.offpeak_price,
            buying_price=policy.fit_price,
            peak_flag=False,
        )
    alpha_max = max(p.alpha_at(slot) for p in prosumers)
    bound = min_b(policy.a, alpha_max, e_d, e_t)
    if policy.b <= bound:
        raise ConfigurationError(
            f"slot {slot}: b={policy.b} does not exceed the required bound {bound:.6f} "
            f"(a={policy.a}, max alpha={alpha_max}, overshoot={e_d - e_t:.6f})"
        )
    return PriceSignal(
        slot=slot,
        selling_price=peak_price(policy.a, policy.b, e_d, e_t),
        buying_price=policy.fit_price,
        peak_flag=True,
    )
