"""chainnet: deterministic multi-agent supply-chain simulator.

Each chain tier is an autonomous agent that registers in a directory,
procures from candidate suppliers through single-round contract-net
negotiation over canonical ACL messages, and manages local inventory. Three
coordination modes (centralized, decentralized, mobile-managed) run on the
same scenarios for comparable metrics: bullwhip ratios, fill rate, cost and
message load.
"""

from chainnet.acl import AclMessage, Performative, decode, encode, is_expired
from chainnet.chain import (
    ChainAgentState,
    DemandProcess,
    ReplenishmentPolicy,
    Tier,
)
from chainnet.coordination import CoordinationMode, ManagementToken
from chainnet.directory import AgentDescriptor, Directory, SimClock
from chainnet.kernels import BACKEND as KERNEL_BACKEND
from chainnet.metrics import MetricsReport, bullwhip_ratio, compile_report
from chainnet.negotiation import (
    Deal,
    DealLedger,
    NegotiationState,
    Proposal,
    ScoreWeights,
    select_best,
)
from chainnet.runtime import World
from chainnet.scenario import ScenarioConfig, load_scenario

__version__ = "0.1.0"

__all__ = [
    "AclMessage",
    "AgentDescriptor",
    "ChainAgentState",
    "CoordinationMode",
    "Deal",
    "DealLedger",
    "DemandProcess",
    "Directory",
    "KERNEL_BACKEND",
    "ManagementToken",
    "MetricsReport",
    "NegotiationState",
    "Performative",
    "Proposal",
    "ReplenishmentPolicy",
    "ScenarioConfig",
    "ScoreWeights",
    "SimClock",
    "Tier",
    "World",
    "bullwhip_ratio",
    "compile_report",
    "decode",
    "encode",
    "is_expired",
    "load_scenario",
    "select_best",
    "__version__",
]
