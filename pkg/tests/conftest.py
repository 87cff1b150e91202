"""Shared builders for hand-specified agent models."""

from __future__ import annotations

import pytest

from aucmdp.agent_mdp import enumerate_status_vectors
from aucmdp.domain import AgentModel, ConditionProfile, Health, Status
from aucmdp.priors import REWARD_TABLE


def build_model(
    pathway,
    horizon,
    progression_rule,
    obtention_rule,
    criticality=1.0,
    condition_id=0,
    reward=REWARD_TABLE,
):
    """Assemble a full AgentModel from per-context rules.

    ``progression_rule(health, statuses)`` returns a triple over next
    health in (healthy, sick, critical) order; ``obtention_rule(health,
    statuses, position)`` a triple over (have, had, need) for the frontier
    at ``position``.  Rules are invoked for every enumerable context, so
    the resulting model is always complete.
    """
    profile = ConditionProfile(condition_id, criticality, tuple(pathway))
    m = len(profile.pathway)
    progression = {}
    obtention = {}
    for sv in enumerate_status_vectors(m):
        pos = None
        if not any(s is Status.HAVE for s in sv):
            for i, s in enumerate(sv):
                if s is Status.NEED:
                    pos = i
                    break
        for h in Health:
            progression[(h, sv)] = progression_rule(h, sv)
            if pos is not None:
                obtention[(h, sv)] = obtention_rule(h, sv, pos)
    return AgentModel(
        condition=profile,
        horizon=horizon,
        health_progression=progression,
        resource_obtention=obtention,
        reward=reward,
    )


def stay_put(health, statuses):
    """Health never changes."""
    row = [0.0, 0.0, 0.0]
    row[int(health)] = 1.0
    return tuple(row)


def certain_acquisition(health, statuses, position):
    return (1.0, 0.0, 0.0)


def heal_when_complete(health, statuses):
    """Become healthy with certainty once every resource is had or have;
    otherwise stay put."""
    if all(s in (Status.HAD, Status.HAVE) for s in statuses):
        return (1.0, 0.0, 0.0)
    return stay_put(health, statuses)


@pytest.fixture
def deterministic_healer():
    """Pathway of one resource, guaranteed acquisition, heals as soon as
    the resource is held: the canonical hand-traceable patient."""
    return build_model((0,), 6, heal_when_complete, certain_acquisition)
