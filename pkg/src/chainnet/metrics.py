"""Run metrics: bullwhip amplification, inventory and backlog costs, fill
rate and communication load.

Bullwhip is the stage-by-stage variance ratio: each tier's placed orders
against the demand that tier observed (orders from its downstream; consumer
demand for the Sale tier). Population variance throughout, and a constant
demand series makes the ratio Undefined (None) rather than an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from chainnet.chain import CHAIN_ORDER


class LengthMismatch(ValueError):
    """Order and demand series of different lengths."""


class SeriesTooShort(ValueError):
    """Variance ratio needs at least two observations."""


class EmptyLog(ValueError):
    """compile_report over a run that produced no samples."""


@dataclass(frozen=True)
class SeriesStats:
    """Count, mean and population variance (denominator n) of a series."""

    n: int
    mean: float
    variance: float

    @classmethod
    def from_series(cls, values: Sequence[float]) -> "SeriesStats":
        n = len(values)
        if n < 1:
            raise ValueError("stats need at least one observation")
        mean = math.fsum(values) / n
        variance = math.fsum((v - mean) ** 2 for v in values) / n
        return cls(n=n, mean=mean, variance=variance)


def bullwhip_ratio(orders: Sequence[float], demand: Sequence[float]) -> Optional[float]:
    """Var(orders) / Var(demand); None (Undefined) when demand never varies."""
    if len(orders) != len(demand):
        raise LengthMismatch(f"{len(orders)} orders vs {len(demand)} demand points")
    if len(orders) < 2:
        raise SeriesTooShort("need at least two observations")
    demand_var = SeriesStats.from_series(demand).variance
    if demand_var == 0.0:
        return None
    return SeriesStats.from_series(orders).variance / demand_var


@dataclass
class MetricsReport:
    """Aggregated run output; ``bullwhip`` maps tier name to ratio or None."""

    bullwhip: Dict[str, Optional[float]]
    fill_rate: float
    avg_inventory: float
    avg_backlog: float
    total_cost: float
    messages_sent: Dict[str, int]
    negotiations: Dict[str, int] = field(default_factory=lambda: {"settled": 0, "failed": 0})

    def to_json_dict(self) -> dict:
        return {
            "avg_backlog": self.avg_backlog,
            "avg_inventory": self.avg_inventory,
            "bullwhip": dict(self.bullwhip),
            "fill_rate": self.fill_rate,
            "messages_sent": dict(self.messages_sent),
            "negotiations": dict(self.negotiations),
            "total_cost": self.total_cost,
        }

    def tier_rows(self) -> List[tuple]:
        """Long-format (tier, metric, value) rows for the flat CSV."""
        rows = []
        for tier, ratio in self.bullwhip.items():
            rows.append((tier, "bullwhip_ratio", "" if ratio is None else ratio))
        rows.extend([
            ("total", "fill_rate", self.fill_rate),
            ("total", "avg_inventory", self.avg_inventory),
            ("total", "avg_backlog", self.avg_backlog),
            ("total", "total_cost", self.total_cost),
            ("total", "negotiations_settled", self.negotiations["settled"]),
            ("total", "negotiations_failed", self.negotiations["failed"]),
        ])
        return rows


def vacuous_report(agent_ids: Sequence[str], tiers: Sequence[str]) -> MetricsReport:
    """Degenerate-run conventions: vacuous fill rate 1.0, Undefined bullwhip,
    zero cost."""
    return MetricsReport(
        bullwhip={tier: None for tier in tiers},
        fill_rate=1.0,
        avg_inventory=0.0,
        avg_backlog=0.0,
        total_cost=0.0,
        messages_sent={agent_id: 0 for agent_id in agent_ids},
    )


def compile_report(event_log: Sequence[dict], snapshots: Sequence, cost_h: float,
                   cost_b: float) -> MetricsReport:
    """Compute every report field from a completed run's log and snapshots.

    Per-tier series come from the snapshot columns: orders placed by the tier
    and demand seen by it, summed over the tier's agents per tick. Fill rate
    is consumer-facing (demand events at the Sale tier), vacuously 1.0 for a
    zero-demand run. total_cost = sum over ticks and agents of
    h*stock + b*backlog.
    """
    if not snapshots:
        raise EmptyLog("no snapshots to report over")

    ticks = sorted({row.tick for row in snapshots})
    tick_index = {t: i for i, t in enumerate(ticks)}
    n_ticks = len(ticks)

    tiers_present = []
    for tier in CHAIN_ORDER:
        if any(row.tier == tier.value for row in snapshots):
            tiers_present.append(tier.value)
    orders = {tier: [0.0] * n_ticks for tier in tiers_present}
    demand = {tier: [0.0] * n_ticks for tier in tiers_present}
    messages: Dict[str, int] = {}
    total_stock = 0.0
    total_backlog = 0.0
    total_cost = 0.0
    for row in snapshots:
        i = tick_index[row.tick]
        orders[row.tier][i] += row.order_placed
        demand[row.tier][i] += row.demand_seen
        messages[row.agent] = messages.get(row.agent, 0) + row.messages_sent
        total_stock += row.stock
        total_backlog += row.backlog
        total_cost += cost_h * row.stock + cost_b * row.backlog

    bullwhip: Dict[str, Optional[float]] = {}
    for tier in tiers_present:
        if n_ticks < 2:
            bullwhip[tier] = None
            continue
        bullwhip[tier] = bullwhip_ratio(orders[tier], demand[tier])

    demanded = 0.0
    on_time = 0.0
    settled = 0
    failed = 0
    for record in event_log:
        kind = record["kind"]
        if kind == "demand":
            demanded += record["payload"]["quantity"]
            on_time += record["payload"]["on_time"]
        elif kind == "deal_settled":
            settled += 1
        elif kind == "negotiation_failed":
            failed += 1
    fill_rate = 1.0 if demanded == 0.0 else on_time / demanded

    return MetricsReport(
        bullwhip=bullwhip,
        fill_rate=fill_rate,
        avg_inventory=total_stock / n_ticks,
        avg_backlog=total_backlog / n_ticks,
        total_cost=total_cost,
        messages_sent=dict(sorted(messages.items())),
        negotiations={"settled": settled, "failed": failed},
    )
