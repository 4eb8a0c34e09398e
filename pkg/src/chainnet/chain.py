"""Supply-chain physics: tiers, per-agent inventory state, demand forecasting,
replenishment policies and shipment pipelines.

Quantities are real-valued throughout; the policy algebra stays exact and the
conservation checks run tolerance-free except for float dust.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple


class Tier(Enum):
    """Chain stages, ordered upstream to downstream."""

    RAW_MATERIAL = "RawMaterial"
    STORAGE = "Storage"
    TRANSPORTATION = "Transportation"
    PRODUCTION = "Production"
    DISTRIBUTION = "Distribution"
    SALE = "Sale"


CHAIN_ORDER: Tuple[Tier, ...] = (
    Tier.RAW_MATERIAL,
    Tier.STORAGE,
    Tier.TRANSPORTATION,
    Tier.PRODUCTION,
    Tier.DISTRIBUTION,
    Tier.SALE,
)


def upstream_tier(tier: Tier) -> Optional[Tier]:
    """The tier this tier procures from; None for the raw-material source."""
    idx = CHAIN_ORDER.index(tier)
    return CHAIN_ORDER[idx - 1] if idx > 0 else None


class PolicyKind(Enum):
    ORDER_UP_TO = "order_up_to"
    SAFETY_LEAD_TIME = "safety_lead_time"


@dataclass(frozen=True)
class ReplenishmentPolicy:
    """Order-up-to policy family.

    ``order_up_to`` targets F*(L+1) + safety_factor*F; ``safety_lead_time`` is
    the constant-buffer baseline: same target with L replaced by
    L + safety_lead_time and no safety factor.
    """

    kind: PolicyKind = PolicyKind.ORDER_UP_TO
    window: int = 4
    safety_factor: float = 0.0
    safety_lead_time: int = 0

    def __post_init__(self):
        if not isinstance(self.window, int) or self.window < 1:
            raise ValueError("window must be an integer >= 1")
        if self.safety_factor < 0:
            raise ValueError("safety_factor must be >= 0")
        if not isinstance(self.safety_lead_time, int) or self.safety_lead_time < 0:
            raise ValueError("safety_lead_time must be an integer >= 0")


class DemandKind(Enum):
    CONSTANT = "constant"
    STEP = "step"
    SEEDED_NOISE = "seeded_noise"


@dataclass(frozen=True)
class DemandProcess:
    """External consumer demand feeding the Sale tier.

    Draws are clamped at zero; ``seeded_noise`` is Gaussian around the mean
    with spread sigma, drawn from the run's seeded generator.
    """

    kind: DemandKind = DemandKind.CONSTANT
    mean: float = 0.0
    amplitude: float = 0.0
    step_tick: int = 0
    sigma: float = 0.0

    def __post_init__(self):
        if self.mean < 0:
            raise ValueError("mean must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    def draw(self, tick: int, rng: random.Random) -> float:
        if self.kind is DemandKind.CONSTANT:
            return float(self.mean)
        if self.kind is DemandKind.STEP:
            level = self.mean if tick < self.step_tick else self.mean + self.amplitude
            return max(0.0, float(level))
        return max(0.0, rng.gauss(self.mean, self.sigma))


@dataclass
class ChainAgentState:
    """One agent's local inventory picture.

    ``on_order`` counts both in-transit quantities (delivery_schedule) and
    quantities awarded to a supplier but not yet shipped; ``sale_history``
    holds (tick, quantity) demand observations.
    """

    stock_level: float = 0.0
    backlog: float = 0.0
    on_order: float = 0.0
    sale_history: List[Tuple[int, float]] = field(default_factory=list)
    demand_expectation: float = 0.0
    delivery_schedule: List[Tuple[int, float]] = field(default_factory=list)

    def schedule_delivery(self, arrival_tick: int, quantity: float) -> None:
        """Insert an in-transit shipment, keeping the schedule sorted."""
        bisect.insort(self.delivery_schedule, (arrival_tick, quantity))


def forecast_demand(sale_history, window: int) -> float:
    """Moving average of the most recent min(window, len) demand quantities;
    zero on empty history."""
    if not sale_history:
        return 0.0
    recent = sale_history[-window:] if window < len(sale_history) else sale_history
    return math.fsum(q for _, q in recent) / len(recent)


def compute_order_quantity(state: ChainAgentState, policy: ReplenishmentPolicy, lead_time: int) -> float:
    """Order-up-to gap: max(0, target - inventory position).

    Target is F*(L+1) + s*F with F the demand expectation; position is
    stock - backlog + on_order. The safety-lead-time baseline plans against
    L + Ls with s = 0.
    """
    if lead_time < 1:
        raise ValueError("lead_time must be >= 1")
    forecast = state.demand_expectation
    if policy.kind is PolicyKind.SAFETY_LEAD_TIME:
        effective_lead = lead_time + policy.safety_lead_time
        safety = 0.0
    else:
        effective_lead = lead_time
        safety = policy.safety_factor
    target = forecast * (effective_lead + 1) + safety * forecast
    position = state.stock_level - state.backlog + state.on_order
    return max(0.0, target - position)


def advance_pipeline(state: ChainAgentState, now: int) -> float:
    """Pop all shipments arriving exactly now into stock; returns the arrived
    quantity. on_order shrinks by the same amount."""
    arrivals = 0.0
    schedule = state.delivery_schedule
    i = 0
    while i < len(schedule) and schedule[i][0] == now:
        arrivals += schedule[i][1]
        i += 1
    if i:
        del schedule[:i]
        state.stock_level += arrivals
        state.on_order -= arrivals
        if abs(state.on_order) < 1e-9:  # float dust from partial-shipment splits
            state.on_order = 0.0
    return arrivals


def fulfill_demand(state: ChainAgentState, quantity: float, now: int) -> float:
    """Serve new demand plus any backlog from stock; backlog is served first.

    Appends (now, quantity) to the sale history and returns the shipped
    amount, which never exceeds stock on hand.
    """
    if quantity < 0:
        raise ValueError("demand must be >= 0")
    shipped = min(state.stock_level, quantity + state.backlog)
    state.stock_level -= shipped
    state.backlog = state.backlog + quantity - shipped
    if abs(state.backlog) < 1e-9:
        state.backlog = 0.0
    state.sale_history.append((now, quantity))
    return shipped
