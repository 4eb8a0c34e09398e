"""Agent runtime and the deterministic tick scheduler.

Each tick runs fixed phases: (1) deliver due messages, (2) agent turns in
ascending id order (mailbox processing, negotiation deadlines, procurement or
planning decisions), (3) chain physics (token movement, pipeline arrivals,
demand fulfillment and shipping), (4) metrics snapshot, (5) clock advance.
All messaging is store-and-forward with at least one tick of delay, so
intra-tick agent order can never leak information; for a fixed seed and
scenario the full event log is byte-reproducible.

Agent decision code sees only its own state, its mailbox and directory search
results. The single sanctioned exception is the centralized coordinator,
which plans from a global view of every agent's state.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional

from chainnet import coordination
from chainnet.acl import (
    AclMessage,
    Award,
    CallForBids,
    OrderRequest,
    Performative,
    Proposal,
    StatusInfo,
    is_expired,
    to_document,
)
from chainnet.chain import (
    ChainAgentState,
    Tier,
    advance_pipeline,
    compute_order_quantity,
    forecast_demand,
    fulfill_demand,
    upstream_tier,
)
from chainnet.coordination import (
    CoordinationMode,
    ManagementToken,
    NoSupplierFound,
    plan_orders,
    select_supplier,
    token_due,
    transfer_token,
)
from chainnet.directory import AgentDescriptor, Directory, HorizonExceeded, SimClock
from chainnet.negotiation import (
    DEADLINE,
    DealLedger,
    NegotiationState,
    clarify_and_settle,
    information_update,
    suggestion_check,
)

MIN_QTY = 1e-9


@dataclass
class _Obligation:
    """Seller-side promise to ship: remaining quantity owed to one buyer."""

    conversation_id: str
    buyer: str
    quantity: float
    promised: int


@dataclass
class _AwardTrack:
    """Buyer-side record of a settled deal until fully shipped."""

    seller: str
    quantity: float
    shipped: float = 0.0
    open: bool = True


@dataclass(frozen=True)
class SnapshotRow:
    """One agent's end-of-tick sample; column order matches the CSV output."""

    tick: int
    agent: str
    tier: str
    stock: float
    backlog: float
    on_order: float
    demand_seen: float
    order_placed: float
    messages_sent: int


class Agent:
    """One chain tier participant: local inventory plus protocol state."""

    def __init__(self, descriptor: AgentDescriptor, *, policy, reliability, lead_time,
                 unit_price, initial_stock, weights):
        self.descriptor = descriptor
        self.id = descriptor.id
        self.tier = descriptor.tier
        self.policy = policy
        self.reliability = reliability
        self.lead_time = lead_time
        self.unit_price = unit_price
        self.weights = weights
        self.state = ChainAgentState(stock_level=float(initial_stock))
        # resolved by the world from the scenario topology
        self.upstream_service: Optional[str] = None
        self.upstream_item: Optional[str] = None
        self.item_sold: Optional[str] = None

        self.mailbox: List[AclMessage] = []
        self.negotiations: Dict[str, NegotiationState] = {}
        self.closed: Dict[str, NegotiationState] = {}
        self.ledger = DealLedger()
        self.awards: Dict[str, _AwardTrack] = {}
        self.obligations: List[_Obligation] = []
        self.new_obligations: List[_Obligation] = []
        self.lead_prior = lead_time
        self.health: Dict[str, list] = {}
        # coordinator only: unbooked REQUEST quantities per buyer, stamped
        # with the tick the supplier is due to book them; overdue entries
        # mean the supplier vanished and the gap must reopen
        self.pending_requests: Dict[str, List[list]] = {}
        # per-tick counters, sampled into the snapshot then reset
        self.sent_count = 0
        self.demand_seen = 0.0
        self.orders_placed = 0.0
        # set on first positive demand; from then on every tick records an
        # observation (zeros included) so forecasts measure units per tick
        self.demand_active = False

    def committed_quantity(self) -> float:
        """Quantity requested in still-open negotiations (not yet on_order)."""
        return sum(ns.cfp.quantity for ns in self.negotiations.values())

    # -- phase 2: one scheduler turn -------------------------------------

    def turn(self, world: "World", now: int) -> None:
        inbox, self.mailbox = self.mailbox, []
        for message in inbox:
            self._dispatch(world, message, now)
        self._resolve_deadlines(world, now)
        self._write_off_dead_sellers(world, now)
        if world.mode is CoordinationMode.CENTRALIZED:
            if world.coordinator_id == self.id:
                self._central_plan(world, now)
        else:
            self._procure(world, now)
            if world.mode is CoordinationMode.MOBILE_MANAGED and world.token.holder == self.id:
                self._broadcast_health(world, now)

    def _dispatch(self, world, message, now):
        kind = message.performative
        if kind is Performative.CFP:
            self._on_cfp(world, message, now)
        elif kind is Performative.PROPOSE:
            self._on_propose(world, message, now)
        elif kind is Performative.ACCEPT_PROPOSAL:
            self._on_accept(world, message, now)
        elif kind is Performative.REQUEST:
            self._on_request(world, message, now)
        elif kind is Performative.INFORM:
            self._on_inform(world, message, now)
        # REJECT_PROPOSAL / CONFIRM / FAILURE need no reaction in this model

    def _on_cfp(self, world, message, now):
        cfp: CallForBids = message.content
        if self.item_sold is None or cfp.item != self.item_sold:
            return
        if is_expired(message, now):
            return
        bid = Proposal(
            bidder=self.id,
            item=cfp.item,
            quantity=cfp.quantity,
            unit_price=self.unit_price,
            lead_time=self.lead_time,
            reliability=self.reliability,
        )
        world.send(AclMessage(
            performative=Performative.PROPOSE,
            sender=self.id,
            receiver=message.sender,
            conversation_id=message.conversation_id,
            content=bid,
            sent_at=now,
            reply_by=message.reply_by,
        ))

    def _on_propose(self, world, message, now):
        conversation = message.conversation_id
        negotiation = self.negotiations.get(conversation) or self.closed.get(conversation)
        if negotiation is None:
            world.log("proposal_rejected", self.id, {
                "bidder": message.sender,
                "conversation_id": conversation,
                "reason": "wrong_phase",
            })
            return
        reason = suggestion_check(message, negotiation, now)
        if reason is None:
            self.negotiations[conversation] = information_update(negotiation, message)
        else:
            world.log("proposal_rejected", self.id, {
                "bidder": message.sender,
                "conversation_id": conversation,
                "reason": reason.value,
            })

    def _on_accept(self, world, message, now):
        award: Award = message.content
        self.new_obligations.append(_Obligation(
            conversation_id=message.conversation_id,
            buyer=message.sender,
            quantity=award.quantity,
            promised=award.promised_delivery,
        ))

    def _on_request(self, world, message, now):
        order: OrderRequest = message.content
        if order.deliver_to == self.id:
            # self-supply instruction (raw tier): material enters from the source
            arrival = now + self.lead_time
            self.state.schedule_delivery(arrival, order.quantity)
            self.state.on_order += order.quantity
            world.request_booked(self.id, order.quantity)
            return
        self.new_obligations.append(_Obligation(
            conversation_id=message.conversation_id,
            buyer=order.deliver_to,
            quantity=order.quantity,
            promised=now + self.lead_time,
        ))
        world.book_direct_award(
            buyer_id=order.deliver_to,
            conversation_id=message.conversation_id,
            seller_id=self.id,
            quantity=order.quantity,
        )
        world.request_booked(order.deliver_to, order.quantity)

    def _on_inform(self, world, message, now):
        info: StatusInfo = message.content
        if info.topic != "chain-health":
            return
        for agent_id, entry in info.body.get("stocks", {}).items():
            known = self.health.get(agent_id)
            if known is None or entry[2] > known[2]:
                self.health[agent_id] = entry

    def _resolve_deadlines(self, world, now):
        for conversation in list(self.negotiations):
            negotiation = self.negotiations[conversation]
            if negotiation.deadline >= now:
                continue
            resolved = information_update(negotiation, DEADLINE)
            del self.negotiations[conversation]
            if not resolved.received:
                self.closed[conversation] = resolved
                world.log("negotiation_failed", self.id, {
                    "conversation_id": conversation,
                    "reason": "no_proposals",
                })
                continue
            result = clarify_and_settle(resolved, self.ledger, now)
            self.closed[conversation] = result.state
            for message in result.messages:
                world.send(message)
            deal = result.deal
            self.state.on_order += deal.quantity
            self.awards[conversation] = _AwardTrack(seller=deal.seller, quantity=deal.quantity)
            self.lead_prior = deal.promised_delivery - now
            world.log("deal_settled", self.id, {
                "conversation_id": conversation,
                "seller": deal.seller,
                "item": deal.item,
                "quantity": deal.quantity,
                "unit_price": deal.unit_price,
                "promised_delivery": deal.promised_delivery,
                "value": deal.value,
            })

    def _write_off_dead_sellers(self, world, now):
        for conversation, track in self.awards.items():
            if not track.open or track.seller in world.directory:
                continue
            remaining = track.quantity - track.shipped
            track.open = False
            if remaining > MIN_QTY:
                self.state.on_order = max(0.0, self.state.on_order - remaining)
                world.log("writeoff", self.id, {
                    "conversation_id": conversation,
                    "seller": track.seller,
                    "quantity": remaining,
                })

    def _procure(self, world, now):
        if self.tier is Tier.RAW_MATERIAL:
            self._self_replenish(world, now)
            return
        # quiescence window: never open a negotiation whose deadline event
        # (deadline + 1) would fall beyond the last tick
        if now + world.bid_window + 2 > world.clock.horizon:
            return
        try:
            messages, negotiation, quantity = coordination.decentralized_procure(
                self, world.directory, now, world.bid_window)
        except NoSupplierFound:
            world.log("negotiation_failed", self.id, {"reason": "no_supplier"})
            return
        if negotiation is None:
            return
        for message in messages:
            world.send(message)
        self.negotiations[negotiation.conversation_id] = negotiation
        self.orders_placed += quantity
        world.log("order_placed", self.id, {
            "conversation_id": negotiation.conversation_id,
            "quantity": quantity,
        })

    def _self_replenish(self, world, now):
        """Raw-material tier draws on an unconstrained source at its own lead."""
        self.state.demand_expectation = forecast_demand(self.state.sale_history, self.policy.window)
        quantity = compute_order_quantity(self.state, self.policy, self.lead_time)
        if quantity <= MIN_QTY:
            return
        self.state.schedule_delivery(now + self.lead_time, quantity)
        self.state.on_order += quantity
        self.orders_placed += quantity
        world.log("order_placed", self.id, {"channel": "source", "quantity": quantity})

    def _central_plan(self, world, now):
        """Coordinator-only: plan every agent's order from the global view."""
        world.sanctioned_reads += 1
        suppliers: Dict[str, Optional[str]] = {}
        rows = []
        for agent_id in world.directory.ids():
            agent = world.agents[agent_id]
            if agent.tier is Tier.RAW_MATERIAL:
                suppliers[agent_id] = agent_id
                lead = agent.lead_time + 1
            else:
                candidates = [d for d in world.directory.search(agent.upstream_service)
                              if d.id != agent_id]
                if not candidates:
                    world.log("supply_unavailable", agent_id, {"service": agent.upstream_service})
                    continue
                chosen = select_supplier(candidates)
                suppliers[agent_id] = chosen.id
                lead = world.agents[chosen.id].lead_time + 1
            pending = self._pending_quantity(agent_id, now)
            rows.append((agent_id, agent.state, agent.policy, lead, pending))
        for agent_id, quantity in plan_orders(rows):
            buyer = world.agents[agent_id]
            supplier_id = suppliers[agent_id]
            conversation = f"req-{agent_id}-t{now:05d}"
            item = buyer.item_sold if buyer.tier is Tier.RAW_MATERIAL else buyer.upstream_item
            if supplier_id == self.id:
                # coordinator supplies this buyer itself: direct handoff, no wire hop
                self.new_obligations.append(_Obligation(
                    conversation_id=conversation,
                    buyer=agent_id,
                    quantity=quantity,
                    promised=now + 1 + self.lead_time,
                ))
                buyer.state.on_order += quantity
                buyer.awards[conversation] = _AwardTrack(seller=self.id, quantity=quantity)
            else:
                world.send(AclMessage(
                    performative=Performative.REQUEST,
                    sender=self.id,
                    receiver=supplier_id,
                    conversation_id=conversation,
                    content=OrderRequest(item=item, quantity=quantity, deliver_to=agent_id),
                    sent_at=now,
                ))
                due = now + world.delay_between(self.id, supplier_id)
                self.pending_requests.setdefault(agent_id, []).append([due, quantity])
            buyer.orders_placed += quantity
            world.log("order_placed", agent_id, {
                "conversation_id": conversation,
                "planned_by": self.id,
                "quantity": quantity,
            })

    def _pending_quantity(self, buyer_id: str, now: int) -> float:
        """Live pending-request total for one buyer; drops overdue entries
        (their supplier died with the request in flight)."""
        entries = self.pending_requests.get(buyer_id)
        if not entries:
            return 0.0
        live = [entry for entry in entries if entry[0] >= now]
        self.pending_requests[buyer_id] = live
        return sum(quantity for _, quantity in live)

    def booked_request(self, buyer_id: str, quantity: float) -> None:
        """A supplier booked one of this coordinator's requests."""
        entries = self.pending_requests.get(buyer_id, [])
        for i, (_, pending_quantity) in enumerate(entries):
            if abs(pending_quantity - quantity) <= MIN_QTY:
                del entries[i]
                return

    def _broadcast_health(self, world, now):
        self.health[self.id] = [self.state.stock_level, self.state.backlog, now]
        body = {"stocks": {aid: list(entry) for aid, entry in self.health.items()}}
        for receiver in world.directory.ids():
            if receiver == self.id:
                continue
            world.send(AclMessage(
                performative=Performative.INFORM,
                sender=self.id,
                receiver=receiver,
                conversation_id=f"health-{self.id}-t{now:05d}",
                content=StatusInfo(topic="chain-health", body=body),
                sent_at=now,
                protocol="chain-health",
            ))


class World:
    """Owns the directory, message bus, clock and all agents for one run."""

    def __init__(self, config):
        self.config = config
        self.mode: CoordinationMode = config.mode
        self.clock = SimClock(horizon=config.horizon)
        self.directory = Directory()
        self.agents: Dict[str, Agent] = {}
        self.bid_window = config.bid_window
        self.message_delay = config.message_delay
        self.link_delays = dict(config.link_delays)
        self.rng = random.Random(config.seed)
        self.events: List[dict] = []
        self.snapshots: List[SnapshotRow] = []
        self.sanctioned_reads = 0
        self._bus: Dict[int, List[AclMessage]] = {}

        service_of_tier: Dict[Tier, str] = {}
        for spec in config.agents:
            descriptor = AgentDescriptor(
                id=spec.id, tier=spec.tier, services=frozenset(spec.services))
            self.directory.register(descriptor)
            agent = Agent(
                descriptor,
                policy=spec.policy,
                reliability=spec.reliability,
                lead_time=spec.lead_time,
                unit_price=spec.unit_price,
                initial_stock=spec.initial_stock,
                weights=config.weights,
            )
            self.agents[spec.id] = agent
            supply = [s for s in spec.services if s.startswith("supply:")]
            if supply:
                service_of_tier[spec.tier] = supply[0]
                agent.item_sold = supply[0].split(":", 1)[1]
        for agent in self.agents.values():
            upstream = upstream_tier(agent.tier)
            if upstream is not None:
                service = service_of_tier.get(upstream)
                agent.upstream_service = service
                if service:
                    agent.upstream_item = service.split(":", 1)[1]

        self.kills: Dict[int, List[str]] = {}
        for failure in config.failures:
            self.kills.setdefault(failure.at_tick, []).append(failure.kill_agent)
        for tick in self.kills:
            self.kills[tick].sort()

        self.coordinator_id: Optional[str] = None
        if self.mode is CoordinationMode.CENTRALIZED:
            production = [a.id for a in self.agents.values() if a.tier is Tier.PRODUCTION]
            self.coordinator_id = min(production)

        self.token: Optional[ManagementToken] = None
        if self.mode is CoordinationMode.MOBILE_MANAGED:
            first = self.directory.ids()[0]
            self.token = ManagementToken(holder=first, acquired_at=0, dwell=config.dwell)
            self.log("token_transfer", first, {"previous": None})

    # -- infrastructure services used by agents --------------------------

    def log(self, kind: str, agent: str, payload: dict) -> None:
        self.events.append({
            "tick": self.clock.tick,
            "kind": kind,
            "agent": agent,
            "payload": payload,
        })

    def send(self, message: AclMessage) -> None:
        deliver_at = self.clock.tick + self.delay_between(message.sender, message.receiver)
        self._bus.setdefault(deliver_at, []).append(message)
        self.agents[message.sender].sent_count += 1
        self.log("acl_sent", message.sender, {
            "deliver_at": deliver_at,
            "message": to_document(message),
        })

    def book_direct_award(self, buyer_id: str, conversation_id: str, seller_id: str,
                          quantity: float) -> None:
        """Bookkeeping for centralized orders: the buyer's on_order and award
        tracking are maintained by the infrastructure, not by messages."""
        buyer = self.agents[buyer_id]
        buyer.state.on_order += quantity
        buyer.awards[conversation_id] = _AwardTrack(seller=seller_id, quantity=quantity)

    def request_booked(self, buyer_id: str, quantity: float) -> None:
        """Clear the coordinator's pending-request ledger once a REQUEST has
        been booked by the receiving supplier."""
        if self.coordinator_id is None:
            return
        self.agents[self.coordinator_id].booked_request(buyer_id, quantity)

    def delay_between(self, sender: str, receiver: str) -> int:
        return self.link_delays.get((sender, receiver), self.message_delay)

    # -- the tick loop ----------------------------------------------------

    def run_tick(self) -> None:
        if self.clock.tick >= self.clock.horizon:
            raise HorizonExceeded(f"tick {self.clock.tick} is at the horizon")
        now = self.clock.tick

        for agent_id in self.kills.get(now, ()):
            self._kill(agent_id)

        # phase 1: deliver messages due now (dead recipients drop silently)
        for message in self._bus.pop(now, []):
            if message.receiver in self.directory:
                self.agents[message.receiver].mailbox.append(message)

        # phase 2: agent turns, ascending id
        registered = self.directory.ids()
        for agent_id in registered:
            self.agents[agent_id].turn(self, now)
        if self.mode is CoordinationMode.CENTRALIZED and self.coordinator_id not in self.directory:
            self.log("coordinator_down", self.coordinator_id, {})

        # phase 3: physics
        if self.mode is CoordinationMode.MOBILE_MANAGED and token_due(self.token, self.directory, now):
            previous = self.token.holder
            self.token = transfer_token(self.token, self.directory, now)
            self.log("token_transfer", self.token.holder, {"previous": previous})
        registered = self.directory.ids()
        for agent_id in registered:
            arrived = advance_pipeline(self.agents[agent_id].state, now)
            if arrived > 0.0:
                self.log("arrival", agent_id, {"quantity": arrived})
        for agent_id in registered:
            self._fulfill(self.agents[agent_id], now)

        # phase 4: snapshot, then reset per-tick counters
        for agent_id in registered:
            agent = self.agents[agent_id]
            self.snapshots.append(SnapshotRow(
                tick=now,
                agent=agent_id,
                tier=agent.tier.value,
                stock=agent.state.stock_level,
                backlog=agent.state.backlog,
                on_order=agent.state.on_order,
                demand_seen=agent.demand_seen,
                order_placed=agent.orders_placed,
                messages_sent=agent.sent_count,
            ))
            agent.sent_count = 0
            agent.demand_seen = 0.0
            agent.orders_placed = 0.0

        self.clock.advance()

    def run_to_horizon(self) -> None:
        while self.clock.tick < self.clock.horizon:
            self.run_tick()

    def _kill(self, agent_id: str) -> None:
        if agent_id not in self.directory:
            return
        self.directory.deregister(agent_id)
        self.agents[agent_id].mailbox.clear()
        self.log("agent_kill", agent_id, {})

    def _fulfill(self, agent: Agent, now: int) -> None:
        state = agent.state
        if agent.tier is Tier.SALE:
            quantity = self.config.demand.draw(now, self.rng)
            if quantity > 0.0:
                agent.demand_active = True
            if not agent.demand_active:
                return
            backlog_before = state.backlog
            shipped = fulfill_demand(state, quantity, now)
            on_time = min(quantity, max(0.0, shipped - backlog_before))
            agent.demand_seen += quantity
            self.log("demand", agent.id, {
                "quantity": quantity,
                "shipped": shipped,
                "on_time": on_time,
            })
            return

        # obligations owed to deregistered buyers evaporate
        kept = []
        for obligation in agent.obligations:
            if obligation.buyer in self.directory:
                kept.append(obligation)
            else:
                state.backlog = max(0.0, state.backlog - obligation.quantity)
                self.log("order_cancelled", agent.id, {
                    "buyer": obligation.buyer,
                    "conversation_id": obligation.conversation_id,
                    "quantity": obligation.quantity,
                })
        agent.obligations = kept
        fresh, agent.new_obligations = agent.new_obligations, []
        new_quantity = 0.0
        for obligation in fresh:
            if obligation.buyer in self.directory:
                agent.obligations.append(obligation)
                new_quantity += obligation.quantity
            else:
                self.log("order_cancelled", agent.id, {
                    "buyer": obligation.buyer,
                    "conversation_id": obligation.conversation_id,
                    "quantity": obligation.quantity,
                })
        agent.demand_seen += new_quantity
        if new_quantity > 0.0:
            agent.demand_active = True
        if not agent.demand_active:
            return
        shipped = fulfill_demand(state, new_quantity, now)
        remaining = shipped
        # allocation epsilon far below the conservation tolerance (1e-9)
        while agent.obligations and remaining > 1e-12:
            obligation = agent.obligations[0]
            take = min(obligation.quantity, remaining)
            obligation.quantity -= take
            remaining -= take
            arrival = max(obligation.promised, now + 1)
            buyer = self.agents[obligation.buyer]
            buyer.state.schedule_delivery(arrival, take)
            track = buyer.awards.get(obligation.conversation_id)
            if track is not None:
                track.shipped += take
                if track.shipped >= track.quantity - MIN_QTY:
                    track.open = False
            self.log("shipment", agent.id, {
                "to": obligation.buyer,
                "conversation_id": obligation.conversation_id,
                "quantity": take,
                "arrival": arrival,
            })
            if obligation.quantity <= 1e-12:
                agent.obligations.pop(0)
