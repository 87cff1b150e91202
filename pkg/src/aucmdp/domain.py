"""Core value types shared by every other module.

Health levels, resource statuses, condition profiles, per-agent and joint
states, and feasible per-step allocations.  All types are immutable after
construction and validate their own invariants, so a structurally broken
object cannot circulate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping, Optional, Sequence


class DomainError(ValueError):
    """A structurally invalid domain object (broken pathway monotonicity,
    malformed probability table, infeasible allocation, ...)."""


class Health(IntEnum):
    """Patient health level, ordered from best to worst."""

    HEALTHY = 0
    SICK = 1
    CRITICAL = 2

    @property
    def text(self) -> str:
        return _HEALTH_TEXT[self]

    @classmethod
    def from_text(cls, text: str) -> "Health":
        try:
            return _HEALTH_FROM_TEXT[text]
        except KeyError:
            raise DomainError(f"unknown health value {text!r}") from None


_HEALTH_TEXT = {Health.HEALTHY: "healthy", Health.SICK: "sick", Health.CRITICAL: "critical"}
_HEALTH_FROM_TEXT = {v: k for k, v in _HEALTH_TEXT.items()}


def nu(health: Health) -> int:
    """Ordinal severity encoding: healthy=0, sick=1, critical=2."""
    return int(health)


_NU_PRIME = {Health.HEALTHY: 1, Health.SICK: 5, Health.CRITICAL: 10}


def nu_prime(health: Health) -> int:
    """Weighted severity encoding: healthy=1, sick=5, critical=10."""
    return _NU_PRIME[health]


class Status(IntEnum):
    """Utilization state of a single pathway resource for one agent."""

    NEED = 0
    HAVE = 1
    HAD = 2

    @property
    def text(self) -> str:
        return _STATUS_TEXT[self]

    @classmethod
    def from_text(cls, text: str) -> "Status":
        try:
            return _STATUS_FROM_TEXT[text]
        except KeyError:
            raise DomainError(f"unknown resource status {text!r}") from None


_STATUS_TEXT = {Status.NEED: "need", Status.HAVE: "have", Status.HAD: "had"}
_STATUS_FROM_TEXT = {v: k for k, v in _STATUS_TEXT.items()}

# Probability triples over next health are always ordered
# (healthy, sick, critical); triples over next resource status are always
# ordered (have, had, need).
HEALTH_ORDER = (Health.HEALTHY, Health.SICK, Health.CRITICAL)
STATUS_ORDER = (Status.HAVE, Status.HAD, Status.NEED)

_PROB_TOL = 1e-12


def is_monotone(statuses: Sequence[Status]) -> bool:
    """True if the status vector is a prefix of ``had``, at most one
    ``have``, then only ``need`` -- the only shapes a linear pathway can
    produce."""
    i = 0
    m = len(statuses)
    while i < m and statuses[i] is Status.HAD:
        i += 1
    if i < m and statuses[i] is Status.HAVE:
        i += 1
    return all(s is Status.NEED for s in statuses[i:])


def frontier_position(statuses: Sequence[Status]) -> Optional[int]:
    """Pathway position of the next resource this agent can bid for.

    ``None`` while a resource is being consumed (a ``have`` is present) or
    once the pathway is complete.
    """
    if not is_monotone(statuses):
        raise DomainError(f"status vector violates pathway monotonicity: {statuses}")
    if any(s is Status.HAVE for s in statuses):
        return None
    for pos, s in enumerate(statuses):
        if s is Status.NEED:
            return pos
    return None


@dataclass(frozen=True)
class ConditionProfile:
    """A condition: its criticality and the ordered chain of resources it
    requires.  ``pathway`` holds global resource ids."""

    condition_id: int
    criticality: float
    pathway: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "pathway", tuple(self.pathway))
        if not 1.0 <= self.criticality <= 2.0:
            raise DomainError(f"criticality {self.criticality} outside [1, 2]")
        if not self.pathway:
            raise DomainError("pathway must be nonempty")
        if len(set(self.pathway)) != len(self.pathway):
            raise DomainError(f"pathway has duplicate resources: {self.pathway}")

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "criticality": self.criticality,
            "pathway": list(self.pathway),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConditionProfile":
        return cls(d["condition_id"], d["criticality"], tuple(d["pathway"]))


@dataclass(frozen=True)
class AgentState:
    """One agent's observable state: health plus one status per pathway
    resource.  ``discharged`` marks the absorbing post-treatment state."""

    health: Health
    statuses: tuple[Status, ...]
    discharged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "statuses", tuple(self.statuses))
        if not is_monotone(self.statuses):
            raise DomainError(f"status vector violates pathway monotonicity: {self.statuses}")
        if self.discharged and not (
            self.health is Health.HEALTHY and all(s is Status.HAD for s in self.statuses)
        ):
            raise DomainError("discharged agents must be healthy with all resources consumed")

    def to_dict(self) -> dict:
        return {
            "health": self.health.text,
            "statuses": [s.text for s in self.statuses],
            "discharged": self.discharged,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AgentState":
        return cls(
            Health.from_text(d["health"]),
            tuple(Status.from_text(s) for s in d["statuses"]),
            bool(d.get("discharged", False)),
        )


def frontier(state: AgentState, profile: ConditionProfile) -> Optional[int]:
    """Global id of the resource the agent can bid for next, or ``None``."""
    if len(state.statuses) != len(profile.pathway):
        raise DomainError("status vector length does not match pathway length")
    pos = frontier_position(state.statuses)
    return None if pos is None else profile.pathway[pos]


def _check_triple(triple, what: str) -> tuple[float, float, float]:
    t = tuple(float(x) for x in triple)
    if len(t) != 3:
        raise DomainError(f"{what}: expected a probability triple, got {triple!r}")
    if any(x < 0.0 for x in t):
        raise DomainError(f"{what}: negative probability in {t}")
    if abs(sum(t) - 1.0) > _PROB_TOL:
        raise DomainError(f"{what}: probabilities sum to {sum(t)}, not 1")
    return t


@dataclass
class AgentModel:
    """One consumer's factored MDP.

    ``health_progression`` maps (current health, status vector) to a
    probability triple over next health, in HEALTH_ORDER.
    ``resource_obtention`` maps (current health, status vector) to the
    agent's subjective probability triple over the next status of the
    resource it bids for, in STATUS_ORDER.  Entries are only required for
    contexts where a bid is possible.
    ``reward`` is the 3x3 table indexed [current health][next health].
    """

    condition: ConditionProfile
    horizon: int
    health_progression: dict
    resource_obtention: dict
    reward: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        m = len(self.condition.pathway)
        for (h, sv), triple in self.health_progression.items():
            if len(sv) != m:
                raise DomainError("health progression context length mismatch")
            self.health_progression[(h, sv)] = _check_triple(triple, f"omega({h}, {sv})")
        for (h, sv), triple in self.resource_obtention.items():
            if len(sv) != m:
                raise DomainError("resource obtention context length mismatch")
            self.resource_obtention[(h, sv)] = _check_triple(triple, f"lambda({h}, {sv})")
        self.reward = tuple(tuple(float(x) for x in row) for row in self.reward)
        if len(self.reward) != 3 or any(len(row) != 3 for row in self.reward):
            raise DomainError("reward must be a 3x3 table")

    def phi(self, h: Health, h_next: Health) -> float:
        return self.reward[h][h_next]

    def to_dict(self) -> dict:
        def pack(table):
            return [
                [h.text, [s.text for s in sv], list(triple)]
                for (h, sv), triple in sorted(table.items())
            ]

        return {
            "condition": self.condition.to_dict(),
            "horizon": self.horizon,
            "health_progression": pack(self.health_progression),
            "resource_obtention": pack(self.resource_obtention),
            "reward": [list(row) for row in self.reward],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AgentModel":
        def unpack(rows):
            return {
                (Health.from_text(h), tuple(Status.from_text(s) for s in sv)): tuple(triple)
                for h, sv, triple in rows
            }

        return cls(
            condition=ConditionProfile.from_dict(d["condition"]),
            horizon=d["horizon"],
            health_progression=unpack(d["health_progression"]),
            resource_obtention=unpack(d["resource_obtention"]),
            reward=tuple(tuple(row) for row in d["reward"]),
        )


@dataclass(frozen=True)
class JointState:
    """The environment state: every agent's state plus the step counter."""

    agents: tuple[AgentState, ...]
    time: int = 0

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.time < 0:
            raise DomainError(f"negative time {self.time}")

    def to_dict(self) -> dict:
        return {"agents": [a.to_dict() for a in self.agents], "time": self.time}

    @classmethod
    def from_dict(cls, d: Mapping) -> "JointState":
        return cls(tuple(AgentState.from_dict(a) for a in d["agents"]), d["time"])


@dataclass(frozen=True)
class Allocation:
    """A per-step assignment of resources to agents.

    Injective in both directions by construction: a resource goes to at
    most one agent and an agent receives at most one resource.  Pathway
    consistency (the resource is the recipient's frontier) depends on the
    joint state and is enforced where states are available.
    """

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(r), int(a)) for r, a in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        resources = [r for r, _ in pairs]
        agents = [a for _, a in pairs]
        if len(set(resources)) != len(resources):
            raise DomainError(f"resource assigned twice: {pairs}")
        if len(set(agents)) != len(agents):
            raise DomainError(f"agent assigned two resources: {pairs}")

    @classmethod
    def from_assignment(cls, assignment: Mapping[int, int]) -> "Allocation":
        return cls(tuple(assignment.items()))

    @property
    def assignment(self) -> dict[int, int]:
        """resource id -> agent index"""
        return dict(self.pairs)

    def resource_for(self, agent: int) -> Optional[int]:
        for r, a in self.pairs:
            if a == agent:
                return r
        return None

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Allocation":
        return cls(tuple((r, a) for r, a in d["pairs"]))


EMPTY_ALLOCATION = Allocation()


def count_joint_states(
    n_agents: int, n_resources: int, n_health: int = 3, n_statuses: int = 3
) -> int:
    """Size of the unfactored joint state space, |H|^N * |R|^(M*N).

    Exact arbitrary-precision arithmetic; the result overflows no fixed
    width for realistic N and M.
    """
    if min(n_agents, n_resources, n_health, n_statuses) < 1:
        raise ValueError("all arguments must be >= 1")
    return n_health**n_agents * n_statuses ** (n_resources * n_agents)


def count_joint_actions(n_agents: int, n_resources: int) -> int:
    """Number of full allocations of M distinct resources among N agents,
    N!/(N-M)!; defined for M <= N."""
    if min(n_agents, n_resources) < 1:
        raise ValueError("all arguments must be >= 1")
    if n_resources > n_agents:
        raise ValueError("defined only for n_resources <= n_agents")
    return math.perm(n_agents, n_resources)
