"""Generative model for simulated patients: condition profiles, Dirichlet
priors over the health-progression and resource-obtention tables, the
fixed reward table, and seeded sampling of complete agent models."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .agent_mdp import enumerate_status_vectors
from .domain import (
    AgentModel,
    ConditionProfile,
    Health,
    Status,
    frontier_position,
    nu_prime,
)

# Fixed reward table Phi[current health][next health], rows and columns in
# (healthy, sick, critical) order: becoming healthy pays, staying sick or
# deteriorating costs.
REWARD_TABLE: tuple[tuple[float, ...], ...] = (
    (10.0, -5.0, -10.0),
    (15.0, 0.0, -5.0),
    (5.0, 0.0, -5.0),
)


class StatusClass(Enum):
    """Equivalence classes of status vectors used by both priors."""

    ALL_HAD = "all_had"
    ALL_HELD = "all_held"  # only had/have, with an active have
    ALL_NEED = "all_need"
    PARTIAL = "partial"


def status_class(statuses: Sequence[Status]) -> StatusClass:
    if all(s is Status.HAD for s in statuses):
        return StatusClass.ALL_HAD
    if all(s in (Status.HAD, Status.HAVE) for s in statuses):
        return StatusClass.ALL_HELD
    if all(s is Status.NEED for s in statuses):
        return StatusClass.ALL_NEED
    return StatusClass.PARTIAL


def alpha_health(criticality: float, statuses: Sequence[Status]) -> tuple[float, float, float]:
    """Dirichlet parameters over next health (healthy, sick, critical):
    mass shifts to healthier states as the pathway completes and to sicker
    states with higher criticality."""
    c = criticality
    cls = status_class(statuses)
    if cls is StatusClass.ALL_HAD:
        return (12.0, 4.0 * c, 2.0 * c)
    if cls is StatusClass.ALL_HELD:
        return (12.0, 4.0 * c, 4.0 * c)
    if cls is StatusClass.ALL_NEED:
        return (4.0, 4.0 * c, 10.0 * c)
    return (4.0, 10.0 * c, 10.0 * c)


def alpha_resource(
    n_agents: int, health: Health, statuses: Sequence[Status], position: int
) -> tuple[float, float, float]:
    """Dirichlet parameters over the considered resource's next status
    (have, had, need): sicker agents are likelier to obtain it, a resource
    whose pathway predecessor is still needed is essentially unobtainable,
    and more agents in the system means more competition."""
    v = float(nu_prime(health))
    n = float(n_agents)
    if all(s in (Status.HAD, Status.HAVE) for s in statuses):
        return (10.0 * v, v, n)
    if position > 0 and statuses[position - 1] is Status.NEED:
        return (v, 5.0 * v, 10.0 * n)
    if all(s is Status.NEED for s in statuses):
        return (v, v, n)
    # Contexts the three rules above miss (had-prefix with the predecessor
    # already consumed) get the neutral all-need triple.
    return (v, v, n)


def sample_dirichlet(alpha: Sequence[float], rng: np.random.Generator, size: Optional[int] = None):
    """Dirichlet draw(s) via independent gamma variates normalized to sum
    to one.  With ``size`` returns an array of shape (size, len(alpha))."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError(f"Dirichlet parameters must be positive, got {alpha}")
    if size is None:
        g = rng.gamma(a)
        return tuple(g / g.sum())
    g = rng.gamma(a, size=(size, len(a)))
    return g / g.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class PriorConfig:
    """Everything needed to draw a population of patient models."""

    n_agents: int
    n_resources: int
    n_conditions: int
    pathway_length: int
    condition_probs: Optional[tuple[float, ...]] = None  # default uniform
    criticalities: Optional[tuple[float, ...]] = None  # default evenly spaced on [1, 2]
    reward: tuple[tuple[float, ...], ...] = REWARD_TABLE

    def __post_init__(self):
        if min(self.n_agents, self.n_resources, self.n_conditions, self.pathway_length) < 1:
            raise ValueError("all size parameters must be >= 1")
        if self.pathway_length > self.n_resources:
            raise ValueError(
                f"pathway length {self.pathway_length} exceeds resource pool {self.n_resources}"
            )
        if self.condition_probs is not None:
            probs = tuple(float(p) for p in self.condition_probs)
            if len(probs) != self.n_conditions:
                raise ValueError("condition_probs length must equal n_conditions")
            if abs(sum(probs) - 1.0) > 1e-9 or any(p < 0 for p in probs):
                raise ValueError("condition_probs must be a distribution")
            object.__setattr__(self, "condition_probs", probs)
        if self.criticalities is not None:
            crit = tuple(float(c) for c in self.criticalities)
            if len(crit) != self.n_conditions:
                raise ValueError("criticalities length must equal n_conditions")
            object.__setattr__(self, "criticalities", crit)

    @property
    def phi(self) -> tuple[float, ...]:
        if self.condition_probs is not None:
            return self.condition_probs
        return tuple([1.0 / self.n_conditions] * self.n_conditions)

    @property
    def condition_criticalities(self) -> tuple[float, ...]:
        if self.criticalities is not None:
            return self.criticalities
        return tuple(np.linspace(1.0, 2.0, self.n_conditions))


def build_profiles(config: PriorConfig, rng: np.random.Generator) -> list[ConditionProfile]:
    """One profile per condition; each pathway is a random ordered subset
    of the resource pool of the configured length."""
    profiles = []
    for d, crit in enumerate(config.condition_criticalities):
        pathway = tuple(
            int(r) for r in rng.choice(config.n_resources, size=config.pathway_length, replace=False)
        )
        profiles.append(ConditionProfile(d, float(crit), pathway))
    return profiles


def draw_condition(config: PriorConfig, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    for d, p in enumerate(config.phi):
        acc += p
        if u < acc:
            return d
    return config.n_conditions - 1


# Row permutations of the single progression triple, by current health,
# over next-health order (healthy, sick, critical).
def _omega_rows(w: tuple[float, float, float]) -> dict[Health, tuple[float, float, float]]:
    return {
        Health.SICK: (w[0], w[1], w[2]),
        Health.HEALTHY: (w[0], w[2], w[1]),
        Health.CRITICAL: (w[1], w[0], w[2]),
    }


def sample_agent_model(
    config: PriorConfig,
    profiles: Sequence[ConditionProfile],
    rng: np.random.Generator,
    horizon: int,
) -> AgentModel:
    """Draw one patient: condition, then progression and obtention tables.

    One progression triple is drawn per status-vector equivalence class
    and shared across the three current-health rows via the fixed
    permutations; obtention triples are drawn per (health, statuses)
    context in which a bid is possible.
    """
    d = draw_condition(config, rng)
    profile = profiles[d]
    m = len(profile.pathway)

    class_omega: dict[StatusClass, tuple[float, float, float]] = {}
    progression: dict = {}
    obtention: dict = {}
    for sv in enumerate_status_vectors(m):
        cls = status_class(sv)
        if cls not in class_omega:
            class_omega[cls] = sample_dirichlet(alpha_health(profile.criticality, sv), rng)
        for h, row in _omega_rows(class_omega[cls]).items():
            progression[(h, sv)] = row
        pos = frontier_position(sv)
        if pos is not None:
            for h in Health:
                alpha = alpha_resource(config.n_agents, h, sv, pos)
                obtention[(h, sv)] = sample_dirichlet(alpha, rng)

    return AgentModel(
        condition=profile,
        horizon=horizon,
        health_progression=progression,
        resource_obtention=obtention,
        reward=config.reward,
    )


def sample_population(
    config: PriorConfig, horizon: int, seed
) -> tuple[list[ConditionProfile], list[AgentModel]]:
    """Draw the shared condition profiles and one model per agent.

    Each agent consumes its own child RNG stream, so the draw for agent i
    never depends on how many agents precede it.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = ss.spawn(config.n_agents + 1)
    profiles = build_profiles(config, np.random.default_rng(streams[0]))
    models = [
        sample_agent_model(config, profiles, np.random.default_rng(streams[i + 1]), horizon)
        for i in range(config.n_agents)
    ]
    return profiles, models
