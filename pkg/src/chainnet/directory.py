"""Registration directory and discrete clock.

The directory is passive infrastructure (not an agent): agents publish
service descriptors and discover peers exclusively through ``search``, which
is a pure function of the current entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from chainnet.chain import Tier


class DuplicateId(Exception):
    """An agent id was registered twice."""


class HorizonExceeded(Exception):
    """run_tick called with the clock already at the horizon."""


@dataclass(frozen=True)
class AgentDescriptor:
    """Identity, tier role and offered services of a registered agent."""

    id: str
    tier: Tier
    services: frozenset

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("agent id must be a nonempty string")
        if not isinstance(self.tier, Tier):
            raise ValueError("tier must be a Tier")
        services = frozenset(self.services)
        for s in services:
            if not isinstance(s, str) or not s:
                raise ValueError("services must be nonempty strings")
        if self.tier is not Tier.SALE and not services:
            raise ValueError("supplier-capable agents must offer services")
        object.__setattr__(self, "services", services)


class Directory:
    """Registry mapping agent ids to immutable descriptors."""

    def __init__(self):
        self._entries: dict = {}

    def register(self, descriptor: AgentDescriptor) -> None:
        if descriptor.id in self._entries:
            raise DuplicateId(descriptor.id)
        self._entries[descriptor.id] = descriptor

    def deregister(self, agent_id: str) -> None:
        """Remove an entry; removing an absent id is a no-op."""
        self._entries.pop(agent_id, None)

    def search(self, service: str) -> List[AgentDescriptor]:
        """All registered descriptors offering ``service``, ascending by id."""
        hits = [d for d in self._entries.values() if service in d.services]
        hits.sort(key=lambda d: d.id)
        return hits

    def get(self, agent_id: str) -> Optional[AgentDescriptor]:
        return self._entries.get(agent_id)

    def ids(self) -> Tuple[str, ...]:
        """All registered ids in ascending order."""
        return tuple(sorted(self._entries))

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class SimClock:
    """Discrete time: tick advances by exactly one per step, never past the
    horizon."""

    horizon: int
    tick: int = 0

    def __post_init__(self):
        if not isinstance(self.horizon, int) or self.horizon < 0:
            raise ValueError("horizon must be an integer >= 0")
        if not isinstance(self.tick, int) or not 0 <= self.tick <= self.horizon:
            raise ValueError("tick must lie in [0, horizon]")

    def advance(self) -> None:
        if self.tick >= self.horizon:
            raise HorizonExceeded(f"tick {self.tick} is at horizon {self.horizon}")
        self.tick += 1
