"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. All runs derive from the frozen reference scenario (seed 42, horizon
500, decentralized unless stated).
"""

import itertools
import random
from collections import defaultdict

import numpy as np
import pytest

from chainnet import cli
from chainnet.acl import decode, encode
from chainnet.coordination import CoordinationMode
from chainnet.kernels import sweep_pick_best
from chainnet.metrics import compile_report
from chainnet.negotiation import Proposal, ScoreWeights, select_best
from chainnet.runtime import World
from chainnet.scenario import Failure

from test_acl import REJECTIONS

WEIGHTS = (0.5, 0.3, 0.2)
PRICES = [1.0, 2.0, 3.0, 4.0, 5.0]
LEADS = [1, 2, 3]
RELS = [0.0, 0.5, 1.0]
KILL_TICK = 250


def ok(line):
    print(f"ACCEPTANCE PASS: {line}")


# -- criterion 1: protocol oracle equivalence ----------------------------

def grid_attributes():
    rows = [(p, float(l), r) for p, l, r in itertools.product(PRICES, LEADS, RELS)]
    return np.array(rows, dtype=np.float64)


def oracle_score_table(attrs, weights):
    """Independent scorer: every (member, cohort-context) score precomputed
    with plain Python arithmetic in the canonical evaluation order."""
    w_price, w_lead, w_rel = weights
    n = len(attrs)
    table = np.empty((n, 5, 5, 3, 3), dtype=np.float64)
    for i in range(n):
        price, lead, rel = attrs[i]
        for p_lo in range(1, 6):
            for p_hi in range(p_lo, 6):
                np_ = 1.0 if p_hi == p_lo else (p_hi - price) / (p_hi - p_lo)
                for l_lo in range(1, 4):
                    for l_hi in range(l_lo, 4):
                        nl_ = 1.0 if l_hi == l_lo else (l_hi - lead) / (l_hi - l_lo)
                        score = w_price * np_ + w_lead * nl_ + w_rel * rel
                        table[i, p_lo - 1, p_hi - 1, l_lo - 1, l_hi - 1] = score
    return table


def oracle_winners(table, price_idx, lead_idx, combs):
    """Exhaustive argmax with first-index (smallest-bidder) tie-break."""
    p = price_idx[combs]
    l = lead_idx[combs]
    p_lo = p.min(axis=1)
    p_hi = p.max(axis=1)
    l_lo = l.min(axis=1)
    l_hi = l.max(axis=1)
    scores = table[combs, p_lo[:, None], p_hi[:, None], l_lo[:, None], l_hi[:, None]]
    return np.argmax(scores, axis=1).astype(np.int8)


def combinations_array(n, size, chunk):
    """Yield lexicographic combination index chunks as int8 arrays."""
    iterator = itertools.combinations(range(n), size)
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(
            itertools.islice(iterator, chunk)), dtype=np.int8)
        if flat.size == 0:
            return
        yield flat.reshape(-1, size)


def sweep_and_compare(attrs, weights, sizes, sample_stride=0):
    table = oracle_score_table(attrs, weights)
    price_idx = (attrs[:, 0] - 1).astype(np.int64)
    lead_idx = (attrs[:, 1] - 1).astype(np.int64)
    proposals = [Proposal(bidder=f"b{i:02d}", item="widget", quantity=1.0,
                          unit_price=attrs[i, 0], lead_time=int(attrs[i, 1]),
                          reliability=attrs[i, 2])
                 for i in range(len(attrs))]
    score_weights = ScoreWeights(*weights)
    total = 0
    sampled = 0
    for size in sizes:
        for combs in combinations_array(len(attrs), size, 1_000_000):
            kernel = sweep_pick_best(attrs, combs, *weights)
            oracle = oracle_winners(table, price_idx, lead_idx, combs)
            mismatches = np.nonzero(kernel != oracle)[0]
            assert mismatches.size == 0, (
                f"size {size}: {mismatches.size} mismatches, first at "
                f"cohort {combs[mismatches[0]]}")
            if sample_stride:
                for row_index in range(0, len(combs), sample_stride):
                    cohort = [proposals[i] for i in combs[row_index]]
                    winner = select_best(cohort, score_weights)
                    assert winner is cohort[kernel[row_index]]
                    sampled += 1
            total += len(combs)
    return total, sampled


def test_criterion_1_protocol_oracle_equivalence():
    attrs = grid_attributes()
    total, sampled = sweep_and_compare(attrs, WEIGHTS, sizes=(1, 2, 3, 4, 5, 6),
                                       sample_stride=997)
    assert total == 9_531_039
    extra = 0
    for weights in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0),
                    (1 / 3, 1 / 3, 1 / 3)):
        count, _ = sweep_and_compare(attrs, weights, sizes=(1, 2, 3, 4))
        extra += count
    ok(f"criterion 1: select_best == exhaustive argmax on {total:,} cohorts "
       f"(sizes 1-6, reference weights; {sampled} scalar spot checks) plus "
       f"{extra:,} cohorts at 4 corner/uniform weightings; zero mismatches")


# -- criterion 2: codec round trip ---------------------------------------

def test_criterion_2_codec_round_trip():
    from chainnet.acl import (AclMessage, Award, CallForBids, OrderRequest,
                              Performative, Proposal, Rejection, StatusInfo)

    rng = random.Random(20260811)
    count = 10_000
    performatives = list(Performative)
    checked = 0
    for i in range(count):
        sender = f"agent-{rng.randrange(50)}"
        receiver = f"peer-{rng.randrange(50)}"
        sent_at = rng.randrange(10_000)
        reply_by = None if rng.random() < 0.3 else sent_at + rng.randrange(200)
        performative = performatives[i % len(performatives)]
        qty = round(rng.uniform(0.01, 5000.0), 6)
        price = round(rng.uniform(0.01, 500.0), 6)
        if performative is Performative.CFP:
            content = CallForBids(item="widget", quantity=qty,
                                  latest_delivery=sent_at + rng.randrange(100),
                                  issuer=sender)
        elif performative is Performative.PROPOSE:
            content = Proposal(bidder=sender, item="widget", quantity=qty,
                               unit_price=price, lead_time=rng.randrange(1, 60),
                               reliability=round(rng.random(), 6))
        elif performative is Performative.ACCEPT_PROPOSAL:
            content = Award(item="widget", quantity=qty, unit_price=price,
                            promised_delivery=rng.randrange(20_000))
        elif performative is Performative.REJECT_PROPOSAL:
            content = Rejection(reason="not_selected")
        elif performative is Performative.REQUEST:
            content = OrderRequest(item="widget", quantity=qty,
                                   deliver_to=f"third-{rng.randrange(40)}")
        else:
            content = StatusInfo(topic="chain-health",
                                 body={"stocks": {sender: [round(rng.uniform(0, 99), 3),
                                                           0.0, sent_at]}})
        message = AclMessage(performative=performative, sender=sender,
                             receiver=receiver, conversation_id=f"c-{i}",
                             content=content, sent_at=sent_at, reply_by=reply_by)
        assert decode(encode(message)) == message
        checked += 1
    assert checked == count

    rejected = 0
    for name, payload, error in REJECTIONS:
        with pytest.raises(error):
            decode(payload)
        rejected += 1
    ok(f"criterion 2: {count:,} randomized messages round-tripped exactly; "
       f"{rejected}/{len(REJECTIONS)} violation fixtures rejected with the "
       f"specified error")


# -- criterion 3: conservation -------------------------------------------

def test_criterion_3_conservation(reference_config, reference_run):
    world, _ = reference_run
    initial = {a.id: a.initial_stock for a in reference_config.agents}
    arrivals = defaultdict(float)
    shipped = defaultdict(float)
    for event in world.events:
        key = (event["agent"], event["tick"])
        if event["kind"] == "arrival":
            arrivals[key] += event["payload"]["quantity"]
        elif event["kind"] == "shipment":
            shipped[key] += event["payload"]["quantity"]
        elif event["kind"] == "demand":
            shipped[key] += event["payload"]["shipped"]
    previous = dict(initial)
    worst = 0.0
    rows = 0
    for row in world.snapshots:
        expected = (previous[row.agent]
                    + arrivals[(row.agent, row.tick)]
                    - shipped[(row.agent, row.tick)])
        error = abs(row.stock - expected)
        worst = max(worst, error)
        assert error <= 1e-9, (
            f"conservation violated for {row.agent} at tick {row.tick}: "
            f"stock {row.stock} vs expected {expected}")
        assert row.stock >= 0.0 and row.backlog >= 0.0 and row.on_order >= 0.0
        previous[row.agent] = row.stock
        rows += 1
    assert rows == 500 * len(reference_config.agents)
    ok(f"criterion 3: per-tick conservation held for {rows:,} agent-ticks "
       f"(max error {worst:.2e} <= 1e-9); stock/backlog/on_order never negative")


# -- criterion 4: bullwhip -----------------------------------------------

def test_criterion_4_bullwhip(reference_run):
    _, report = reference_run
    ratios = report.bullwhip
    for tier, ratio in ratios.items():
        assert ratio is not None, f"{tier} bullwhip undefined"
        assert ratio >= 1.0, f"{tier} bullwhip {ratio} < 1"
    chain = [ratios["Sale"], ratios["Distribution"], ratios["Production"]]
    assert chain[0] <= chain[1] <= chain[2], f"not monotone upstream: {chain}"
    ok("criterion 4: bullwhip >= 1 at every tier; Sale->Distribution->Production "
       f"monotone nondecreasing ({chain[0]:.2f} <= {chain[1]:.2f} <= {chain[2]:.2f})")


# -- criterion 5: robustness asymmetry -----------------------------------

def orders_after(world, tick):
    return sum(e["payload"]["quantity"] for e in world.events
               if e["kind"] == "order_placed" and e["tick"] > tick)


def test_criterion_5_robustness_asymmetry(reference_config, reference_run):
    _, baseline_report = reference_run

    centralized = reference_config.with_mode(CoordinationMode.CENTRALIZED)
    centralized = centralized.with_failures([Failure("prod-1", KILL_TICK)])
    world_c = World(centralized)
    world_c.run_to_horizon()
    central_orders = orders_after(world_c, KILL_TICK)
    assert central_orders == 0.0, (
        f"centralized coordinator kill still issued {central_orders} orders")

    decentralized = reference_config.with_failures([Failure("prod-2", KILL_TICK)])
    world_d = World(decentralized)
    world_d.run_to_horizon()
    decentral_orders = orders_after(world_d, KILL_TICK)
    assert decentral_orders > 0.0
    report_d = compile_report(world_d.events, world_d.snapshots,
                              reference_config.cost_h, reference_config.cost_b)
    floor = 0.5 * baseline_report.fill_rate
    assert report_d.fill_rate >= floor, (
        f"post-kill fill {report_d.fill_rate:.3f} below half of no-kill "
        f"{baseline_report.fill_rate:.3f}")
    ok("criterion 5: coordinator kill at 250 zeroed all later orders "
       f"(centralized); losing one of two Production suppliers kept orders "
       f"flowing ({decentral_orders:,.0f} units) with fill "
       f"{report_d.fill_rate:.3f} >= 0.5 x {baseline_report.fill_rate:.3f}")


# -- criterion 6: negotiation liveness / exclusivity ----------------------

def test_criterion_6_negotiation_liveness(reference_config, reference_run):
    world, _ = reference_run
    bid_window = reference_config.bid_window
    opened = {}
    terminal = {}
    accepts = defaultdict(int)
    rejects = defaultdict(int)
    on_time_proposals = defaultdict(int)
    for event in world.events:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "order_placed" and "conversation_id" in payload:
            opened[payload["conversation_id"]] = event["tick"]
        elif kind == "deal_settled":
            terminal[payload["conversation_id"]] = ("settled", event["tick"])
        elif kind == "negotiation_failed" and "conversation_id" in payload:
            terminal[payload["conversation_id"]] = ("failed", event["tick"])
        elif kind == "acl_sent":
            message = payload["message"]
            conversation = message["conversation_id"]
            if message["performative"] == "ACCEPT_PROPOSAL":
                accepts[conversation] += 1
            elif message["performative"] == "REJECT_PROPOSAL":
                rejects[conversation] += 1
            elif message["performative"] == "PROPOSE":
                deadline = message.get("reply_by")
                if deadline is not None and payload["deliver_at"] <= deadline:
                    on_time_proposals[conversation] += 1
    assert opened, "reference run opened no conversations"
    settled = 0
    for conversation, opened_at in opened.items():
        deadline = opened_at + bid_window
        assert conversation in terminal, f"{conversation} never terminated"
        outcome, at = terminal[conversation]
        assert at <= deadline + 1, (
            f"{conversation} terminated at {at}, after deadline+1 ({deadline + 1})")
        if outcome == "settled":
            settled += 1
            assert accepts[conversation] == 1, (
                f"{conversation}: {accepts[conversation]} accepts")
            assert accepts[conversation] + rejects[conversation] == \
                on_time_proposals[conversation], (
                    f"{conversation}: accept+reject != on-time proposals")
        else:
            assert accepts[conversation] == 0
    late = [e for e in world.events if e["kind"] == "proposal_rejected"]
    ok(f"criterion 6: {len(opened):,} conversations all terminated by "
       f"deadline+1 ({settled:,} settled, each with exactly one accept and "
       f"accept+reject == on-time proposals; {len(late)} late/rejected "
       f"proposals mutated nothing)")


# -- criterion 7: mobile token -------------------------------------------

def test_criterion_7_mobile_token(reference_config):
    config = reference_config.with_mode(CoordinationMode.MOBILE_MANAGED)
    world = World(config)
    world.run_to_horizon()
    transfers = [e for e in world.events if e["kind"] == "token_transfer"]
    assert transfers[0]["tick"] == 0
    # the transfer chain is connected: exactly one holder at every tick
    for previous, event in zip(transfers, transfers[1:]):
        assert event["payload"]["previous"] == previous["agent"]
    holder_by_tick = {}
    chain_iter = iter(transfers + [None])
    current = next(chain_iter)
    upcoming = next(chain_iter)
    for tick in range(config.horizon):
        while upcoming is not None and upcoming["tick"] <= tick:
            current = upcoming
            upcoming = next(chain_iter)
        holder_by_tick[tick] = current["agent"]
        assert current["agent"] in world.directory
    agents = {a.id for a in config.agents}
    bound = len(agents) * config.dwell
    early_holders = {holder for tick, holder in holder_by_tick.items() if tick < bound}
    assert early_holders == agents, (
        f"agents never holding within {bound} ticks: {agents - early_holders}")
    ok(f"criterion 7: token count 1 at all {config.horizon} ticks; all "
       f"{len(agents)} agents held it within |agents|*dwell = {bound} ticks")


# -- criterion 8: determinism --------------------------------------------

def test_criterion_8_determinism(reference_config, tmp_path):
    first = cli.run(reference_config, tmp_path / "one")
    second = cli.run(reference_config, tmp_path / "two")
    names = ("events.jsonl", "snapshots.csv", "metrics.json", "metrics.csv")
    for name in names:
        a = (tmp_path / "one" / name).read_bytes()
        b = (tmp_path / "two" / name).read_bytes()
        assert a == b, f"{name} differs between consecutive runs"
    size = (tmp_path / "one" / "events.jsonl").stat().st_size
    ok(f"criterion 8: two consecutive reference runs produced byte-identical "
       f"artifacts ({', '.join(names)}; event log {size:,} bytes)")
