"""Scenario file ingestion and validation.

A scenario is one JSON document; every invariant violation raises a
ValidationError naming the offending field path. Unknown keys are rejected so
the accepted schema is exactly the documented one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

from chainnet.chain import (
    CHAIN_ORDER,
    DemandKind,
    DemandProcess,
    PolicyKind,
    ReplenishmentPolicy,
    Tier,
    upstream_tier,
)
from chainnet.coordination import CoordinationMode
from chainnet.negotiation import ScoreWeights


class ParseError(ValueError):
    """Scenario file unreadable or not valid JSON."""


class ValidationError(ValueError):
    """A scenario invariant failed; carries the violated field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Failure:
    """Scheduled agent kill: deregistration plus mailbox loss at a tick."""

    kill_agent: str
    at_tick: int


@dataclass(frozen=True)
class AgentConfig:
    id: str
    tier: Tier
    services: Tuple[str, ...]
    reliability: float
    lead_time: int
    policy: ReplenishmentPolicy
    initial_stock: float
    unit_price: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    horizon: int
    mode: CoordinationMode
    agents: Tuple[AgentConfig, ...]
    demand: DemandProcess
    weights: ScoreWeights
    bid_window: int
    cost_h: float
    cost_b: float
    failures: Tuple[Failure, ...] = ()
    dwell: int = 5
    message_delay: int = 1
    link_delays: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def with_mode(self, mode: CoordinationMode) -> "ScenarioConfig":
        return replace(self, mode=mode)

    def with_failures(self, failures) -> "ScenarioConfig":
        return replace(self, failures=tuple(failures))


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(path, "must be an object")
    return value


def _expect_keys(doc: dict, path: str, required, optional=()):
    missing = set(required) - set(doc)
    if missing:
        raise ValidationError(f"{path}.{sorted(missing)[0]}", "missing required field")
    extra = set(doc) - set(required) - set(optional)
    if extra:
        raise ValidationError(f"{path}.{sorted(extra)[0]}", "unknown field")


def _expect_int(value, path: str, minimum=None, maximum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(path, "must be an integer")
    if minimum is not None and value < minimum:
        raise ValidationError(path, f"must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ValidationError(path, f"must be <= {maximum}")
    return value


def _expect_number(value, path: str, minimum=None, strict_min=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, "must be a number")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(path, "must be finite")
    if minimum is not None and out < minimum:
        raise ValidationError(path, f"must be >= {minimum}")
    if strict_min is not None and out <= strict_min:
        raise ValidationError(path, f"must be > {strict_min}")
    return out


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise ValidationError(path, "must be a nonempty string")
    return value


def _parse_policy(doc, path: str) -> ReplenishmentPolicy:
    doc = _expect_object(doc, path)
    _expect_keys(doc, path, required=("kind", "window"),
                 optional=("safety_factor", "safety_lead_time"))
    kind_name = _expect_str(doc["kind"], f"{path}.kind")
    try:
        kind = PolicyKind(kind_name)
    except ValueError:
        raise ValidationError(f"{path}.kind", f"unknown policy kind {kind_name!r}") from None
    return ReplenishmentPolicy(
        kind=kind,
        window=_expect_int(doc["window"], f"{path}.window", minimum=1),
        safety_factor=_expect_number(doc.get("safety_factor", 0.0), f"{path}.safety_factor", minimum=0.0),
        safety_lead_time=_expect_int(doc.get("safety_lead_time", 0), f"{path}.safety_lead_time", minimum=0),
    )


def _parse_demand(doc, path: str) -> DemandProcess:
    doc = _expect_object(doc, path)
    _expect_keys(doc, path, required=("kind", "mean"),
                 optional=("amplitude", "step_tick", "sigma"))
    kind_name = _expect_str(doc["kind"], f"{path}.kind")
    try:
        kind = DemandKind(kind_name)
    except ValueError:
        raise ValidationError(f"{path}.kind", f"unknown demand kind {kind_name!r}") from None
    amplitude = doc.get("amplitude", 0.0)
    if isinstance(amplitude, bool) or not isinstance(amplitude, (int, float)):
        raise ValidationError(f"{path}.amplitude", "must be a number")
    return DemandProcess(
        kind=kind,
        mean=_expect_number(doc["mean"], f"{path}.mean", minimum=0.0),
        amplitude=float(amplitude),
        step_tick=_expect_int(doc.get("step_tick", 0), f"{path}.step_tick", minimum=0),
        sigma=_expect_number(doc.get("sigma", 0.0), f"{path}.sigma", minimum=0.0),
    )


def _parse_agent(doc, path: str) -> AgentConfig:
    doc = _expect_object(doc, path)
    _expect_keys(
        doc, path,
        required=("id", "tier", "services", "reliability", "lead_time", "policy", "initial_stock"),
        optional=("unit_price",),
    )
    agent_id = _expect_str(doc["id"], f"{path}.id")
    tier_name = _expect_str(doc["tier"], f"{path}.tier")
    try:
        tier = Tier(tier_name)
    except ValueError:
        raise ValidationError(f"{path}.tier", f"unknown tier {tier_name!r}") from None
    if not isinstance(doc["services"], list):
        raise ValidationError(f"{path}.services", "must be a list of strings")
    services = tuple(sorted({_expect_str(s, f"{path}.services") for s in doc["services"]}))
    supply = [s for s in services if s.startswith("supply:")]
    if tier is not Tier.SALE:
        if not services:
            raise ValidationError(f"{path}.services", "supplier-capable agents need services")
        if len(supply) != 1:
            raise ValidationError(
                f"{path}.services", "exactly one 'supply:<item>' service required")
    reliability = _expect_number(doc["reliability"], f"{path}.reliability", minimum=0.0)
    if reliability > 1.0:
        raise ValidationError(f"{path}.reliability", "must be <= 1")
    return AgentConfig(
        id=agent_id,
        tier=tier,
        services=services,
        reliability=reliability,
        lead_time=_expect_int(doc["lead_time"], f"{path}.lead_time", minimum=1),
        policy=_parse_policy(doc["policy"], f"{path}.policy"),
        initial_stock=_expect_number(doc["initial_stock"], f"{path}.initial_stock", minimum=0.0),
        unit_price=_expect_number(doc.get("unit_price", 1.0), f"{path}.unit_price", strict_min=0.0),
    )


def _validate_topology(agents: Tuple[AgentConfig, ...]) -> None:
    supply_of_tier: Dict[Tier, str] = {}
    for i, agent in enumerate(agents):
        supply = [s for s in agent.services if s.startswith("supply:")]
        if not supply:
            continue
        known = supply_of_tier.setdefault(agent.tier, supply[0])
        if known != supply[0]:
            raise ValidationError(
                f"agents[{i}].services",
                f"tier {agent.tier.value} offers both {known!r} and {supply[0]!r}",
            )
    tier_population = {tier: 0 for tier in CHAIN_ORDER}
    for agent in agents:
        tier_population[agent.tier] += 1
    for i, agent in enumerate(agents):
        upstream = upstream_tier(agent.tier)
        if upstream is None:
            continue
        service = supply_of_tier.get(upstream)
        suppliers = 0
        if service is not None:
            suppliers = sum(
                1 for other in agents
                if other.tier is upstream and service in other.services
            )
        if suppliers == 0:
            raise ValidationError(
                f"agents[{i}]",
                f"no upstream supplier in tier {upstream.value} offers a service "
                f"for this {agent.tier.value} agent",
            )
    for tier in CHAIN_ORDER:
        if tier_population[tier] == 0:
            raise ValidationError("agents", f"no agent present in tier {tier.value}")


def parse_scenario(doc, source: str = "<scenario>") -> ScenarioConfig:
    """Validate a parsed JSON document against every scenario invariant."""
    doc = _expect_object(doc, source)
    _expect_keys(
        doc, source,
        required=("seed", "horizon", "mode", "agents", "demand", "weights",
                  "bid_window", "costs", "failures"),
        optional=("dwell", "message_delay", "link_delays"),
    )
    seed = _expect_int(doc["seed"], f"{source}.seed", minimum=0, maximum=2**64 - 1)
    horizon = _expect_int(doc["horizon"], f"{source}.horizon", minimum=0)
    mode_name = _expect_str(doc["mode"], f"{source}.mode")
    try:
        mode = CoordinationMode(mode_name)
    except ValueError:
        raise ValidationError(f"{source}.mode", f"unknown mode {mode_name!r}") from None

    if not isinstance(doc["agents"], list) or not doc["agents"]:
        raise ValidationError(f"{source}.agents", "must be a nonempty list")
    agents = tuple(
        _parse_agent(entry, f"{source}.agents[{i}]") for i, entry in enumerate(doc["agents"])
    )
    seen = set()
    for i, agent in enumerate(agents):
        if agent.id in seen:
            raise ValidationError(f"{source}.agents[{i}].id", f"duplicate id {agent.id!r}")
        seen.add(agent.id)
    _validate_topology(agents)

    weights_doc = _expect_object(doc["weights"], f"{source}.weights")
    _expect_keys(weights_doc, f"{source}.weights", required=("w_price", "w_lead", "w_rel"))
    try:
        weights = ScoreWeights(
            w_price=_expect_number(weights_doc["w_price"], f"{source}.weights.w_price", minimum=0.0),
            w_lead=_expect_number(weights_doc["w_lead"], f"{source}.weights.w_lead", minimum=0.0),
            w_rel=_expect_number(weights_doc["w_rel"], f"{source}.weights.w_rel", minimum=0.0),
        )
    except ValueError as exc:
        raise ValidationError(f"{source}.weights", str(exc)) from None

    costs = _expect_object(doc["costs"], f"{source}.costs")
    _expect_keys(costs, f"{source}.costs", required=("h", "b"))

    if not isinstance(doc["failures"], list):
        raise ValidationError(f"{source}.failures", "must be a list")
    failures = []
    ids = {agent.id for agent in agents}
    for i, entry in enumerate(doc["failures"]):
        fpath = f"{source}.failures[{i}]"
        entry = _expect_object(entry, fpath)
        _expect_keys(entry, fpath, required=("kill_agent", "at_tick"))
        target = _expect_str(entry["kill_agent"], f"{fpath}.kill_agent")
        if target not in ids:
            raise ValidationError(f"{fpath}.kill_agent", f"unknown agent {target!r}")
        failures.append(Failure(
            kill_agent=target,
            at_tick=_expect_int(entry["at_tick"], f"{fpath}.at_tick", minimum=0),
        ))

    link_delays: Dict[Tuple[str, str], int] = {}
    raw_links = doc.get("link_delays", {})
    if not isinstance(raw_links, dict):
        raise ValidationError(f"{source}.link_delays", "must be an object")
    for key, value in raw_links.items():
        lpath = f"{source}.link_delays.{key}"
        if not isinstance(key, str) or "->" not in key:
            raise ValidationError(lpath, "key must look like 'sender->receiver'")
        sender, receiver = key.split("->", 1)
        if sender not in ids or receiver not in ids:
            raise ValidationError(lpath, "link endpoints must be known agents")
        link_delays[(sender, receiver)] = _expect_int(value, lpath, minimum=1)

    try:
        demand = _parse_demand(doc["demand"], f"{source}.demand")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{source}.demand", str(exc)) from None

    return ScenarioConfig(
        seed=seed,
        horizon=horizon,
        mode=mode,
        agents=agents,
        demand=demand,
        weights=weights,
        bid_window=_expect_int(doc["bid_window"], f"{source}.bid_window", minimum=1),
        cost_h=_expect_number(costs["h"], f"{source}.costs.h", minimum=0.0),
        cost_b=_expect_number(costs["b"], f"{source}.costs.b", minimum=0.0),
        failures=tuple(failures),
        dwell=_expect_int(doc.get("dwell", 5), f"{source}.dwell", minimum=1),
        message_delay=_expect_int(doc.get("message_delay", 1), f"{source}.message_delay", minimum=1),
        link_delays=link_delays,
    )


def load_scenario(path) -> ScenarioConfig:
    """Read, parse and validate one scenario file."""
    try:
        with open(path, "rb") as handle:
            raw = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario: {exc}") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid scenario JSON: {exc}") from None
    return parse_scenario(doc, source=str(path))
