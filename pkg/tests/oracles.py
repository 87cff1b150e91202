"""Independent reference implementations used only by the tests.

Everything here recomputes dynamics straight from the model tables with
plain recursion, deliberately sharing no transition or backup code with
the package, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from aucmdp.domain import AgentModel, Health, Status

# ---------------------------------------------------------------------------
# Single-agent expectimax

# States are plain tuples (health, statuses, discharged) so they hash
# cheaply and carry no package behaviour.


def _frontier_pos(statuses):
    if any(s is Status.HAVE for s in statuses):
        return None
    for pos, s in enumerate(statuses):
        if s is Status.NEED:
            return pos
    return None


def _successors(model: AgentModel, health, statuses, bid: bool):
    """(next health, next statuses, probability, discharged) branches."""
    advanced = tuple(Status.HAD if s is Status.HAVE else s for s in statuses)
    branches = [(advanced, 1.0)]
    if bid:
        pos = _frontier_pos(statuses)
        p_have, _p_had, p_need = model.resource_obtention[(health, statuses)]
        p_acq = p_have / (p_have + p_need)
        got = list(advanced)
        got[pos] = Status.HAVE
        branches = []
        if p_acq > 0.0:
            branches.append((tuple(got), p_acq))
        if p_acq < 1.0:
            branches.append((advanced, 1.0 - p_acq))
    omega = model.health_progression[(health, statuses)]
    out = []
    for statuses_next, p_r in branches:
        for h_next, p_h in zip(Health, omega):
            if p_h == 0.0:
                continue
            done = h_next is Health.HEALTHY and all(s is Status.HAD for s in statuses_next)
            out.append((h_next, statuses_next, p_r * p_h, done))
    return out


def expectimax(model: AgentModel):
    """Return a callable V(t, health, statuses, discharged) computed by
    memoized exhaustive recursion."""

    @lru_cache(maxsize=None)
    def value(t, health, statuses, discharged):
        if t >= model.horizon or discharged:
            return 0.0
        best = None
        actions = [False]
        if _frontier_pos(statuses) is not None:
            actions.append(True)
        for bid in actions:
            q = 0.0
            for h_next, sv_next, p, done in _successors(model, health, statuses, bid):
                q += p * (model.phi(health, h_next) + value(t + 1, h_next, sv_next, done))
            if best is None or q > best:
                best = q
        return best

    return value


def expectimax_q(model: AgentModel, t, health, statuses, receive: bool):
    """Myopic Q used by the bid definitions: health evolves one step from
    the pre-step statuses, the frontier becomes `have` iff ``receive``,
    then the optimal continuation takes over."""
    value = expectimax(model)
    advanced = list(tuple(Status.HAD if s is Status.HAVE else s for s in statuses))
    if receive:
        advanced[_frontier_pos(statuses)] = Status.HAVE
    advanced = tuple(advanced)
    omega = model.health_progression[(health, statuses)]
    q = 0.0
    for h_next, p in zip(Health, omega):
        if p == 0.0:
            continue
        done = h_next is Health.HEALTHY and all(s is Status.HAD for s in advanced)
        q += p * value(t + 1, h_next, advanced, done)
    return q


# ---------------------------------------------------------------------------
# Joint brute-force expectimax

def _joint_actions(models, agent_states):
    """Every injective assignment of distinct resources to agents whose
    frontier matches, built by brute force over per-agent choices."""
    options = []
    for model, (health, statuses, discharged) in zip(models, agent_states):
        choices = [None]
        if not discharged:
            pos = _frontier_pos(statuses)
            if pos is not None:
                choices.append(model.condition.pathway[pos])
        options.append(choices)
    actions = []
    for combo in itertools.product(*options):
        granted = [r for r in combo if r is not None]
        if len(set(granted)) == len(granted):
            actions.append(combo)
    return actions


def joint_expectimax(models):
    """V(t, joint state) for the exact joint problem, where the
    environment grants allocated resources deterministically and each
    agent's health evolves independently."""
    horizon = models[0].horizon

    def agent_branches(model, health, statuses, discharged, granted):
        if discharged:
            return [((health, statuses, True), 1.0, 0.0)]
        advanced = list(tuple(Status.HAD if s is Status.HAVE else s for s in statuses))
        if granted:
            advanced[_frontier_pos(statuses)] = Status.HAVE
        advanced = tuple(advanced)
        omega = model.health_progression[(health, statuses)]
        out = []
        for h_next, p in zip(Health, omega):
            if p == 0.0:
                continue
            done = h_next is Health.HEALTHY and all(s is Status.HAD for s in advanced)
            out.append(((h_next, advanced, done), p, model.phi(health, h_next)))
        return out

    @lru_cache(maxsize=None)
    def value(t, joint):
        if t >= horizon:
            return 0.0
        best = None
        for combo in _joint_actions(models, joint):
            branch_lists = [
                agent_branches(m, *st, granted=(r is not None))
                for m, st, r in zip(models, joint, combo)
            ]
            q = 0.0
            for product in itertools.product(*branch_lists):
                p = 1.0
                rew = 0.0
                for _, pi, ri in product:
                    p *= pi
                    rew += ri
                nxt = tuple(st for st, _, _ in product)
                q += p * (rew + value(t + 1, nxt))
            if best is None or q > best:
                best = q
        return best

    return value


def joint_state_key(joint_state):
    """Package JointState -> the oracle's plain-tuple representation."""
    return tuple((a.health, a.statuses, a.discharged) for a in joint_state.agents)
