"""Contract-net negotiation engine.

Single-round sealed-bid protocol: a buyer fans a call for bids out to the
candidate suppliers, collects proposals until a deadline, awards exactly one
winner and explicitly rejects the rest. Inbound traffic is filtered by
``suggestion_check`` before it may touch state (``information_update``), and
``clarify_and_settle`` records the resulting deal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from chainnet import kernels
from chainnet.acl import (
    AclMessage,
    Award,
    CallForBids,
    ConversationState,
    Performative,
    Proposal,
    Rejection,
    is_expired,
)

__all__ = [
    "CallForBids",
    "Proposal",
    "ScoreWeights",
    "NegotiationState",
    "Deal",
    "DealLedger",
    "RejectReason",
    "EmptyCohort",
    "IllegalTransition",
    "DuplicateDeal",
    "DEADLINE",
    "DISPATCHED",
    "suggestion_check",
    "information_update",
    "score_proposal",
    "select_best",
    "clarify_and_settle",
]


class EmptyCohort(ValueError):
    """Scoring or selection over zero proposals."""


class IllegalTransition(Exception):
    """Negotiation phase graph violated."""


class DuplicateDeal(Exception):
    """A conversation id was settled twice."""


@dataclass(frozen=True)
class ScoreWeights:
    """Convex weights over normalized price, lead time and reliability."""

    w_price: float
    w_lead: float
    w_rel: float

    def __post_init__(self):
        for name in ("w_price", "w_lead", "w_rel"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0")
        if abs(self.w_price + self.w_lead + self.w_rel - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


class RejectReason(Enum):
    WRONG_PHASE = "wrong_phase"
    LATE_REPLY = "late_reply"
    INSUFFICIENT_QUANTITY = "insufficient_quantity"
    ITEM_MISMATCH = "item_mismatch"


class _Event(Enum):
    DISPATCHED = "dispatched"
    DEADLINE = "deadline"


DISPATCHED = _Event.DISPATCHED
DEADLINE = _Event.DEADLINE

# Legal phase edges; SETTLED and FAILED are terminal.
_TRANSITIONS = {
    ConversationState.CFP_SENT: {ConversationState.COLLECTING},
    ConversationState.COLLECTING: {ConversationState.AWARDED, ConversationState.FAILED},
    ConversationState.AWARDED: {ConversationState.SETTLED},
    ConversationState.FAILED: set(),
    ConversationState.SETTLED: set(),
}


@dataclass(frozen=True)
class NegotiationState:
    """One buyer-side negotiation: the issued call, collected proposals and
    the phase machine."""

    conversation_id: str
    buyer: str
    cfp: CallForBids
    deadline: int
    weights: ScoreWeights
    phase: ConversationState = ConversationState.CFP_SENT
    received: Tuple[Proposal, ...] = ()


@dataclass(frozen=True)
class Deal:
    """A settled transaction, recorded once per conversation."""

    conversation_id: str
    buyer: str
    seller: str
    item: str
    quantity: float
    unit_price: float
    promised_delivery: int
    settled_at: int

    @property
    def value(self) -> float:
        return self.unit_price * self.quantity


class DealLedger:
    """Append-only deal record with unique conversation ids."""

    def __init__(self):
        self._deals: List[Deal] = []
        self._ids: set = set()

    def append(self, deal: Deal) -> None:
        if deal.conversation_id in self._ids:
            raise DuplicateDeal(deal.conversation_id)
        self._ids.add(deal.conversation_id)
        self._deals.append(deal)

    @property
    def deals(self) -> Tuple[Deal, ...]:
        return tuple(self._deals)

    def total_value(self) -> float:
        return math.fsum(d.value for d in self._deals)

    def __len__(self) -> int:
        return len(self._deals)

    def __contains__(self, conversation_id: str) -> bool:
        return conversation_id in self._ids


def suggestion_check(message: AclMessage, state: NegotiationState, now: int) -> Optional[RejectReason]:
    """Admission filter for inbound negotiation messages.

    Returns None to admit, or the first failing reason in order: phase fit,
    deadline, quantity coverage, item match. Rejection is a value, not a
    fault; rejected messages must never reach information_update.
    """
    if message.conversation_id != state.conversation_id:
        raise ValueError("message routed to the wrong conversation")
    if message.performative is not Performative.PROPOSE or state.phase is not ConversationState.COLLECTING:
        return RejectReason.WRONG_PHASE
    if is_expired(message, now) or now > state.deadline:
        return RejectReason.LATE_REPLY
    proposal = message.content
    if proposal.quantity < state.cfp.quantity:
        return RejectReason.INSUFFICIENT_QUANTITY
    if proposal.item != state.cfp.item:
        return RejectReason.ITEM_MISMATCH
    return None


def information_update(state: NegotiationState, event) -> NegotiationState:
    """Apply an admitted message or a lifecycle event to the phase machine.

    Admitted proposals append while collecting; the deadline event resolves
    COLLECTING to AWARDED (proposals in hand) or FAILED (silence); DISPATCHED
    opens collection after the CFPs go out.
    """
    if event is DISPATCHED:
        _require_edge(state.phase, ConversationState.COLLECTING)
        return replace(state, phase=ConversationState.COLLECTING)
    if event is DEADLINE:
        target = ConversationState.AWARDED if state.received else ConversationState.FAILED
        _require_edge(state.phase, target)
        return replace(state, phase=target)
    if isinstance(event, AclMessage) and isinstance(event.content, Proposal):
        if state.phase is not ConversationState.COLLECTING:
            raise IllegalTransition(f"proposal in phase {state.phase.name}")
        return replace(state, received=state.received + (event.content,))
    raise IllegalTransition(f"event {event!r} in phase {state.phase.name}")


def _require_edge(current: ConversationState, target: ConversationState) -> None:
    if target not in _TRANSITIONS[current]:
        raise IllegalTransition(f"{current.name} -> {target.name}")


def _normalized(value: float, lo: float, hi: float) -> float:
    return 1.0 if hi == lo else (hi - value) / (hi - lo)


def score_proposal(proposal: Proposal, cohort: Sequence[Proposal], weights: ScoreWeights) -> float:
    """Weighted min-max score in [0, 1]; lower price, shorter lead and higher
    reliability all help.

    Canonical evaluation order is (w_price*np + w_lead*nl) + w_rel*rel in
    IEEE double; cohorts degenerate in an attribute normalize it to 1.
    """
    if not cohort:
        raise EmptyCohort("score_proposal over empty cohort")
    if proposal not in cohort:
        raise ValueError("proposal is not a member of the cohort")
    p_lo = min(p.unit_price for p in cohort)
    p_hi = max(p.unit_price for p in cohort)
    l_lo = min(p.lead_time for p in cohort)
    l_hi = max(p.lead_time for p in cohort)
    norm_price = _normalized(proposal.unit_price, p_lo, p_hi)
    norm_lead = _normalized(float(proposal.lead_time), float(l_lo), float(l_hi))
    return weights.w_price * norm_price + weights.w_lead * norm_lead + weights.w_rel * proposal.reliability


def select_best(cohort: Sequence[Proposal], weights: ScoreWeights) -> Proposal:
    """Argmax of score_proposal; exact score ties go to the lexicographically
    smallest bidder id."""
    if not cohort:
        raise EmptyCohort("select_best over empty cohort")
    order = sorted(range(len(cohort)), key=lambda i: (cohort[i].bidder, i))
    ranks = [0] * len(cohort)
    for rank, i in enumerate(order):
        ranks[i] = rank
    idx = kernels.pick_best(
        [p.unit_price for p in cohort],
        [float(p.lead_time) for p in cohort],
        [p.reliability for p in cohort],
        ranks,
        weights.w_price,
        weights.w_lead,
        weights.w_rel,
    )
    return cohort[idx]


@dataclass(frozen=True)
class SettlementResult:
    deal: Deal
    state: NegotiationState
    messages: Tuple[AclMessage, ...]


def clarify_and_settle(state: NegotiationState, ledger: DealLedger, now: int) -> SettlementResult:
    """Record the winning deal and emit the accept/reject fan-out.

    Requires phase AWARDED. Appends the deal to the ledger (unique per
    conversation), promises delivery at now + winner lead time, sends exactly
    one ACCEPT_PROPOSAL and one REJECT_PROPOSAL per loser, and returns the
    SETTLED state.
    """
    if state.phase is not ConversationState.AWARDED:
        raise IllegalTransition(f"settle in phase {state.phase.name}")
    if state.conversation_id in ledger:
        raise DuplicateDeal(state.conversation_id)
    winner = select_best(state.received, state.weights)
    deal = Deal(
        conversation_id=state.conversation_id,
        buyer=state.buyer,
        seller=winner.bidder,
        item=winner.item,
        quantity=winner.quantity,
        unit_price=winner.unit_price,
        promised_delivery=now + winner.lead_time,
        settled_at=now,
    )
    ledger.append(deal)
    messages = [
        AclMessage(
            performative=Performative.ACCEPT_PROPOSAL,
            sender=state.buyer,
            receiver=winner.bidder,
            conversation_id=state.conversation_id,
            content=Award(
                item=deal.item,
                quantity=deal.quantity,
                unit_price=deal.unit_price,
                promised_delivery=deal.promised_delivery,
            ),
            sent_at=now,
        )
    ]
    for proposal in state.received:
        if proposal is winner:
            continue
        messages.append(
            AclMessage(
                performative=Performative.REJECT_PROPOSAL,
                sender=state.buyer,
                receiver=proposal.bidder,
                conversation_id=state.conversation_id,
                content=Rejection(reason="not_selected"),
                sent_at=now,
            )
        )
    settled = replace(state, phase=ConversationState.SETTLED)
    return SettlementResult(deal=deal, state=settled, messages=tuple(messages))
