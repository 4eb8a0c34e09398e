"""Coordination modes under comparison: centralized planning, decentralized
contract-net procurement, and the mobile management token.

The token realizes chain management that keeps moving: it cycles through the
registered agents in ascending id order and its holder only broadcasts
advisory chain-health summaries, never orders on anyone's behalf.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from chainnet.acl import AclMessage, CallForBids, Performative
from chainnet.chain import ChainAgentState, ReplenishmentPolicy, compute_order_quantity, forecast_demand
from chainnet.directory import AgentDescriptor, Directory
from chainnet.negotiation import DISPATCHED, NegotiationState, information_update

# Orders smaller than this are noise from float residuals, not decisions.
MIN_ORDER = 1e-9


class CoordinationMode(Enum):
    CENTRALIZED = "centralized"
    DECENTRALIZED = "decentralized"
    MOBILE_MANAGED = "mobile"


class CoordinatorDown(Exception):
    """Centralized planning attempted while the coordinator is deregistered."""


class NoEligibleHolder(Exception):
    """Token transfer with an empty directory."""


class NoSupplierFound(Exception):
    """Directory search for the upstream service returned no candidates."""


@dataclass(frozen=True)
class ManagementToken:
    """The movable chain-management role; exactly one exists per run."""

    holder: str
    acquired_at: int
    dwell: int

    def __post_init__(self):
        if not isinstance(self.dwell, int) or self.dwell < 1:
            raise ValueError("dwell must be an integer >= 1")


def token_due(token: ManagementToken, directory: Directory, now: int) -> bool:
    """Mandatory-transfer check: dwell elapsed, or the holder vanished."""
    return token.holder not in directory or now - token.acquired_at >= token.dwell


def transfer_token(token: ManagementToken, directory: Directory, now: int) -> ManagementToken:
    """Move the token to the next registered agent in ascending cyclic id
    order after the current holder."""
    ids = directory.ids()
    if not ids:
        raise NoEligibleHolder("no registered agents to hold the token")
    nxt = ids[bisect.bisect_right(ids, token.holder) % len(ids)]
    return ManagementToken(holder=nxt, acquired_at=now, dwell=token.dwell)


def plan_orders(rows: Sequence[tuple]) -> List[Tuple[str, float]]:
    """Centralized planning core: order quantity per agent from a global view.

    ``rows`` are (agent_id, state, policy, lead_time, pending) tuples in
    ascending id order; pending is quantity already requested on the agent's
    behalf but not yet booked into on_order. Forecasts are refreshed from each
    agent's own sale history. Only positive orders are returned.
    """
    orders: List[Tuple[str, float]] = []
    for agent_id, state, policy, lead_time, pending in rows:
        state.demand_expectation = forecast_demand(state.sale_history, policy.window)
        quantity = max(0.0, compute_order_quantity(state, policy, lead_time) - pending)
        if quantity > MIN_ORDER:
            orders.append((agent_id, quantity))
    return orders


def select_supplier(candidates: Sequence[AgentDescriptor]) -> AgentDescriptor:
    """Deterministic supplier choice for centralized mode: smallest id."""
    return min(candidates, key=lambda d: d.id)


def decentralized_procure(
    agent,
    directory: Directory,
    now: int,
    bid_window: int,
) -> Tuple[List[AclMessage], Optional[NegotiationState], float]:
    """One procurement decision from a purely local view.

    Reads only the agent's own state and directory search results. Refreshes
    the forecast, computes the order-up-to gap net of quantities already
    committed to open negotiations, and fans one CFP out to every candidate
    supplier with a reply deadline of now + bid_window.

    Returns (messages, negotiation_state, quantity); quantity 0 means no
    order was needed. Raises NoSupplierFound when the search comes back empty.
    """
    state: ChainAgentState = agent.state
    policy: ReplenishmentPolicy = agent.policy
    state.demand_expectation = forecast_demand(state.sale_history, policy.window)
    # full replenishment lag: bid window + settlement hop + supplier lead
    planning_lead = agent.lead_prior + bid_window + 1
    quantity = max(0.0, compute_order_quantity(state, policy, planning_lead) - agent.committed_quantity())
    if quantity <= MIN_ORDER:
        return [], None, 0.0
    candidates = [d for d in directory.search(agent.upstream_service) if d.id != agent.id]
    if not candidates:
        raise NoSupplierFound(agent.upstream_service)
    conversation_id = f"cn-{agent.id}-t{now:05d}"
    deadline = now + bid_window
    cfp = CallForBids(
        item=agent.upstream_item,
        quantity=quantity,
        latest_delivery=deadline + 1 + agent.lead_prior,
        issuer=agent.id,
    )
    messages = [
        AclMessage(
            performative=Performative.CFP,
            sender=agent.id,
            receiver=candidate.id,
            conversation_id=conversation_id,
            content=cfp,
            sent_at=now,
            reply_by=deadline,
        )
        for candidate in candidates
    ]
    negotiation = NegotiationState(
        conversation_id=conversation_id,
        buyer=agent.id,
        cfp=cfp,
        deadline=deadline,
        weights=agent.weights,
    )
    negotiation = information_update(negotiation, DISPATCHED)
    return messages, negotiation, quantity
