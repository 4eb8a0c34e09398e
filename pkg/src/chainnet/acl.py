"""Agent communication layer: performative-typed messages and a canonical codec.

Every message is a single-line UTF-8 JSON object with lexicographically ordered
keys and no insignificant whitespace, so equal messages always produce equal
bytes and the encoded form doubles as the replay-log record. ``decode`` is
strict: it only accepts byte sequences that ``encode`` could have produced.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Optional, Union


class ParseError(ValueError):
    """Input is not a well-formed canonical message document."""


class InvalidMessage(ValueError):
    """Message violates a structural invariant (closed enums, field domains)."""


class Performative(Enum):
    """Speech-act type of a message; the wire uses the bare enum name."""

    CFP = "CFP"
    PROPOSE = "PROPOSE"
    ACCEPT_PROPOSAL = "ACCEPT_PROPOSAL"
    REJECT_PROPOSAL = "REJECT_PROPOSAL"
    INFORM = "INFORM"
    REQUEST = "REQUEST"
    CONFIRM = "CONFIRM"
    FAILURE = "FAILURE"


class ConversationState(Enum):
    """Lifecycle phase of a negotiation conversation."""

    CFP_SENT = "CFP_SENT"
    COLLECTING = "COLLECTING"
    AWARDED = "AWARDED"
    FAILED = "FAILED"
    SETTLED = "SETTLED"


def _require_str(value, name: str):
    if not isinstance(value, str) or not value:
        raise InvalidMessage(f"{name} must be a nonempty string")


def _require_tick(value, name: str):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InvalidMessage(f"{name} must be a nonnegative integer tick")


def _positive_quantity(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise InvalidMessage(f"{name} must be numeric") from None
    if not math.isfinite(out) or out <= 0.0:
        raise InvalidMessage(f"{name} must be finite and > 0")
    return out


def _check_json_value(value, path: str):
    if value is None or isinstance(value, (str, bool, int)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidMessage(f"{path} must be finite")
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            _check_json_value(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise InvalidMessage(f"{path} keys must be strings")
            _check_json_value(item, f"{path}.{key}")
        return
    raise InvalidMessage(f"{path} is not JSON-representable")


@dataclass(frozen=True)
class CallForBids:
    """Buyer's call for bids on a single item lot."""

    item: str
    quantity: float
    latest_delivery: int
    issuer: str

    def __post_init__(self):
        _require_str(self.item, "item")
        _require_str(self.issuer, "issuer")
        _require_tick(self.latest_delivery, "latest_delivery")
        object.__setattr__(self, "quantity", _positive_quantity(self.quantity, "quantity"))


@dataclass(frozen=True)
class Proposal:
    """A supplier's bid: price, lead time, quantity and quoted reliability."""

    bidder: str
    item: str
    quantity: float
    unit_price: float
    lead_time: int
    reliability: float

    def __post_init__(self):
        _require_str(self.bidder, "bidder")
        _require_str(self.item, "item")
        object.__setattr__(self, "quantity", _positive_quantity(self.quantity, "quantity"))
        object.__setattr__(self, "unit_price", _positive_quantity(self.unit_price, "unit_price"))
        if isinstance(self.lead_time, bool) or not isinstance(self.lead_time, int) or self.lead_time < 1:
            raise InvalidMessage("lead_time must be an integer >= 1")
        try:
            rel = float(self.reliability)
        except (TypeError, ValueError):
            raise InvalidMessage("reliability must be numeric") from None
        if not math.isfinite(rel) or not 0.0 <= rel <= 1.0:
            raise InvalidMessage("reliability must lie in [0, 1]")
        object.__setattr__(self, "reliability", rel)


@dataclass(frozen=True)
class Award:
    """Terms of the accepted proposal, sent to the winning bidder."""

    item: str
    quantity: float
    unit_price: float
    promised_delivery: int

    def __post_init__(self):
        _require_str(self.item, "item")
        _require_tick(self.promised_delivery, "promised_delivery")
        object.__setattr__(self, "quantity", _positive_quantity(self.quantity, "quantity"))
        object.__setattr__(self, "unit_price", _positive_quantity(self.unit_price, "unit_price"))


@dataclass(frozen=True)
class Rejection:
    """Explicit turn-down of a losing proposal."""

    reason: str

    def __post_init__(self):
        _require_str(self.reason, "reason")


@dataclass(frozen=True)
class StatusInfo:
    """Free-form advisory payload (chain-health broadcasts, confirmations)."""

    topic: str
    body: dict

    def __post_init__(self):
        _require_str(self.topic, "topic")
        if not isinstance(self.body, dict):
            raise InvalidMessage("body must be a JSON object")
        _check_json_value(self.body, "body")


@dataclass(frozen=True)
class OrderRequest:
    """Direct order instruction (centralized coordination traffic)."""

    item: str
    quantity: float
    deliver_to: str

    def __post_init__(self):
        _require_str(self.item, "item")
        _require_str(self.deliver_to, "deliver_to")
        object.__setattr__(self, "quantity", _positive_quantity(self.quantity, "quantity"))


Content = Union[CallForBids, Proposal, Award, Rejection, StatusInfo, OrderRequest]

# Admissible content per performative. CFP..REQUEST follow the protocol's
# pairing; CONFIRM and FAILURE carry status payloads.
ADMISSIBLE_CONTENT = {
    Performative.CFP: CallForBids,
    Performative.PROPOSE: Proposal,
    Performative.ACCEPT_PROPOSAL: Award,
    Performative.REJECT_PROPOSAL: Rejection,
    Performative.INFORM: StatusInfo,
    Performative.REQUEST: OrderRequest,
    Performative.CONFIRM: StatusInfo,
    Performative.FAILURE: StatusInfo,
}

_CONTENT_TAGS = {
    CallForBids: "call_for_bids",
    Proposal: "proposal",
    Award: "award",
    Rejection: "rejection",
    StatusInfo: "status_info",
    OrderRequest: "order_request",
}
_TAG_TYPES = {tag: cls for cls, tag in _CONTENT_TAGS.items()}

CONTRACT_NET_PROTOCOL = "contract-net"


@dataclass(frozen=True)
class AclMessage:
    """Typed envelope carrying one content payload between two agents.

    Invariants enforced on construction: sender and receiver distinct,
    reply_by (when present) not before sent_at, and the content variant
    admissible for the performative.
    """

    performative: Performative
    sender: str
    receiver: str
    conversation_id: str
    content: Content
    sent_at: int
    reply_by: Optional[int] = None
    protocol: str = CONTRACT_NET_PROTOCOL

    def __post_init__(self):
        if not isinstance(self.performative, Performative):
            raise InvalidMessage("unknown performative")
        _require_str(self.sender, "sender")
        _require_str(self.receiver, "receiver")
        _require_str(self.conversation_id, "conversation_id")
        _require_str(self.protocol, "protocol")
        if self.sender == self.receiver:
            raise InvalidMessage("sender and receiver must differ")
        _require_tick(self.sent_at, "sent_at")
        if self.reply_by is not None:
            _require_tick(self.reply_by, "reply_by")
            if self.reply_by < self.sent_at:
                raise InvalidMessage("reply_by precedes sent_at")
        expected = ADMISSIBLE_CONTENT[self.performative]
        if type(self.content) is not expected:
            raise InvalidMessage(
                f"content {type(self.content).__name__} not admissible "
                f"for {self.performative.name}"
            )
        if isinstance(self.content, CallForBids) and self.content.latest_delivery < self.sent_at:
            raise InvalidMessage("latest_delivery precedes issuing tick")


def _content_document(content: Content) -> dict:
    doc = {"kind": _CONTENT_TAGS[type(content)]}
    for f in fields(content):
        doc[f.name] = getattr(content, f.name)
    return doc


def to_document(message: AclMessage) -> dict:
    """Plain-dict form of a message; json-dumping it with sorted keys yields
    the canonical wire bytes."""
    doc = {
        "content": _content_document(message.content),
        "conversation_id": message.conversation_id,
        "performative": message.performative.name,
        "protocol": message.protocol,
        "receiver": message.receiver,
        "sender": message.sender,
        "sent_at": message.sent_at,
    }
    if message.reply_by is not None:
        doc["reply_by"] = message.reply_by
    return doc


def encode(message: AclMessage) -> bytes:
    """Serialize to canonical single-line JSON bytes (injective over valid
    messages)."""
    if not isinstance(message, AclMessage):
        raise InvalidMessage("not an AclMessage")
    return json.dumps(
        to_document(message),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
        allow_nan=False,
    ).encode("utf-8")


_TOP_KEYS = {
    "content",
    "conversation_id",
    "performative",
    "protocol",
    "receiver",
    "sender",
    "sent_at",
}


def _build_content(doc) -> Content:
    if not isinstance(doc, dict):
        raise ParseError("content must be an object")
    if "kind" not in doc:
        raise ParseError("content missing key 'kind'")
    kind = doc["kind"]
    cls = _TAG_TYPES.get(kind)
    if cls is None:
        raise InvalidMessage(f"unknown content kind {kind!r}")
    names = [f.name for f in fields(cls)]
    missing = set(names) - set(doc)
    if missing:
        raise ParseError(f"content missing key {sorted(missing)[0]!r}")
    extra = set(doc) - set(names) - {"kind"}
    if extra:
        raise ParseError(f"content has unexpected key {sorted(extra)[0]!r}")
    return cls(**{name: doc[name] for name in names})


def decode(data: Union[bytes, str]) -> AclMessage:
    """Parse canonical bytes back into the unique message that encodes to them.

    Raises ParseError for malformed or non-canonical input and InvalidMessage
    when the parsed document violates a message invariant.
    """
    raw = data.encode("utf-8") if isinstance(data, str) else bytes(data)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed message: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("message must be a JSON object")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise ParseError(f"missing key {sorted(missing)[0]!r}")
    extra = set(doc) - _TOP_KEYS - {"reply_by"}
    if extra:
        raise ParseError(f"unexpected key {sorted(extra)[0]!r}")
    performative_name = doc["performative"]
    if not isinstance(performative_name, str) or performative_name not in Performative.__members__:
        raise InvalidMessage(f"unknown performative {performative_name!r}")
    message = AclMessage(
        performative=Performative[performative_name],
        sender=doc["sender"] if isinstance(doc["sender"], str) else "",
        receiver=doc["receiver"] if isinstance(doc["receiver"], str) else "",
        conversation_id=doc["conversation_id"] if isinstance(doc["conversation_id"], str) else "",
        content=_build_content(doc["content"]),
        sent_at=doc["sent_at"],
        reply_by=doc.get("reply_by"),
        protocol=doc["protocol"] if isinstance(doc["protocol"], str) else "",
    )
    if encode(message) != raw:
        raise ParseError("input is not in canonical form")
    return message


def is_expired(message: AclMessage, now: int) -> bool:
    """True iff the message carried a reply deadline and ``now`` is past it.

    A reply arriving exactly at reply_by is on time.
    """
    return message.reply_by is not None and now > message.reply_by


@dataclass
class Conversation:
    """Transcript of one negotiation, kept ordered by (sent_at, sender)."""

    conversation_id: str
    initiator: str
    state: ConversationState = ConversationState.CFP_SENT
    transcript: list = field(default_factory=list)

    def append(self, message: AclMessage) -> None:
        if message.conversation_id != self.conversation_id:
            raise InvalidMessage(
                f"message belongs to conversation {message.conversation_id!r}, "
                f"not {self.conversation_id!r}"
            )
        key = (message.sent_at, message.sender)
        pos = len(self.transcript)
        while pos > 0 and (self.transcript[pos - 1].sent_at, self.transcript[pos - 1].sender) > key:
            pos -= 1
        self.transcript.insert(pos, message)
