"""The joint environment over all agents and the sample-based planner.

Holds the exact composition of the per-agent models (resources granted
deterministically by an allocation, health evolving stochastically), an
exhaustive joint backward-induction oracle for tiny instances, and a UCT
planner with UCB1 tree policy and uniform-random rollouts.  A compiled
fast path runs iteration-budget UCT on enumerable instances through a
numba kernel.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .agent_mdp import enumerate_states
from .domain import (
    AgentModel,
    AgentState,
    Allocation,
    DomainError,
    Health,
    JointState,
    Status,
    count_joint_states,
    frontier_position,
)

DEFAULT_STATE_CAP = 10**6
DEFAULT_EXPLORATION = 15.0  # matches the largest reward magnitude


class SizeCapError(RuntimeError):
    """Raised when an exact joint computation is refused for size."""


@dataclass
class JointModel:
    """The agents, the shared resource pool, and the common horizon.

    The joint reward is the sum of per-agent rewards and the joint
    transition is the product of per-agent transitions; resources are
    granted deterministically by the chosen allocation, so only health
    evolves stochastically.
    """

    agents: list[AgentModel]
    resources: tuple[int, ...]
    horizon: int

    @classmethod
    def from_agents(cls, models: Sequence[AgentModel]) -> "JointModel":
        if not models:
            raise DomainError("need at least one agent")
        horizons = {m.horizon for m in models}
        if len(horizons) != 1:
            raise DomainError(f"agents disagree on horizon: {sorted(horizons)}")
        resources = sorted({r for m in models for r in m.condition.pathway})
        return cls(list(models), tuple(resources), horizons.pop())

    @property
    def n_agents(self) -> int:
        return len(self.agents)


def initial_state(model: JointModel) -> JointState:
    """Everyone arrives at once: sick, with the whole pathway ahead."""
    return JointState(
        tuple(
            AgentState(Health.SICK, tuple([Status.NEED] * len(m.condition.pathway)))
            for m in model.agents
        ),
        time=0,
    )


def _frontier_signature(state: JointState, model: JointModel) -> tuple:
    sig = []
    for i, st in enumerate(state.agents):
        if st.discharged:
            sig.append(-1)
            continue
        pos = frontier_position(st.statuses)
        sig.append(-1 if pos is None else model.agents[i].condition.pathway[pos])
    return tuple(sig)


def _actions_for_signature(signature: tuple) -> list[Allocation]:
    needy: dict[int, list[int]] = {}
    for i, r in enumerate(signature):
        if r >= 0:
            needy.setdefault(r, []).append(i)
    resources = sorted(needy)
    out: list[Allocation] = []

    def rec(k: int, used: frozenset, acc: tuple):
        if k == len(resources):
            out.append(Allocation(acc))
            return
        r = resources[k]
        rec(k + 1, used, acc)
        for agent in needy[r]:
            if agent not in used:
                rec(k + 1, used | {agent}, acc + ((r, agent),))

    rec(0, frozenset(), ())
    return out


def feasible_joint_actions(state: JointState, model: JointModel) -> list[Allocation]:
    """Every conflict-free assignment of distinct resources to the agents
    whose frontier matches, including partial assignments and the empty
    allocation (which comes first in enumeration order)."""
    return _actions_for_signature(_frontier_signature(state, model))


def _advance(st: AgentState, granted: bool) -> tuple[Status, ...]:
    statuses = [Status.HAD if s is Status.HAVE else s for s in st.statuses]
    if granted:
        pos = frontier_position(st.statuses)
        statuses[pos] = Status.HAVE
    return tuple(statuses)


def _agent_outcomes(
    model: AgentModel, st: AgentState, granted: bool
) -> list[tuple[AgentState, float, float]]:
    """(next state, probability, reward) triples for one agent under the
    environment dynamics: deterministic resource bookkeeping, stochastic
    health."""
    if st.discharged:
        return [(st, 1.0, 0.0)]
    statuses = _advance(st, granted)
    omega = model.health_progression[(st.health, st.statuses)]
    out = []
    for h_next, p in zip(Health, omega):
        if p == 0.0:
            continue
        discharged = h_next is Health.HEALTHY and all(s is Status.HAD for s in statuses)
        out.append((AgentState(h_next, statuses, discharged), p, model.phi(st.health, h_next)))
    return out


def step_environment(
    state: JointState,
    allocation: Allocation,
    model: JointModel,
    rng: np.random.Generator,
    validate: bool = True,
) -> tuple[JointState, float, tuple[float, ...]]:
    """Advance the world one step under an allocation.

    Returns the next joint state, the summed reward, and the per-agent
    reward vector.  Discharged agents are absorbing and earn nothing.
    """
    if validate:
        for r, i in allocation:
            if not 0 <= i < model.n_agents:
                raise DomainError(f"allocation names unknown agent {i}")
            st = state.agents[i]
            if st.discharged:
                raise DomainError(f"resource {r} allocated to discharged agent {i}")
            pos = frontier_position(st.statuses)
            if pos is None or model.agents[i].condition.pathway[pos] != r:
                raise DomainError(f"resource {r} is not agent {i}'s frontier")

    next_agents = []
    rewards = []
    for i, st in enumerate(state.agents):
        if st.discharged:
            next_agents.append(st)
            rewards.append(0.0)
            continue
        granted = allocation.resource_for(i) is not None
        statuses = _advance(st, granted)
        omega = model.agents[i].health_progression[(st.health, st.statuses)]
        u = rng.random()
        acc = 0.0
        h_next = Health.CRITICAL
        for h, p in zip(Health, omega):
            acc += p
            if u < acc:
                h_next = h
                break
        discharged = h_next is Health.HEALTHY and all(s is Status.HAD for s in statuses)
        next_agents.append(AgentState(h_next, statuses, discharged))
        rewards.append(model.agents[i].phi(st.health, h_next))
    return (
        JointState(tuple(next_agents), state.time + 1),
        float(sum(rewards)),
        tuple(rewards),
    )


def _check_state_cap(model: JointModel, cap: int) -> None:
    count = count_joint_states(model.n_agents, len(model.resources))
    if count > cap:
        raise SizeCapError(
            f"joint state space has |H|^N |R|^(MN) = {count} states, "
            f"over the cap of {cap}"
        )


class _JointSpace:
    """Enumeration of the reachable joint space with cached per-state
    actions and per-(state, action) outcome distributions."""

    def __init__(self, model: JointModel, cap: int = DEFAULT_STATE_CAP):
        _check_state_cap(model, cap)
        self.model = model
        per_agent = [enumerate_states(m) for m in model.agents]
        self.states: list[tuple[AgentState, ...]] = [
            tuple(combo) for combo in itertools.product(*per_agent)
        ]
        self.index = {s: i for i, s in enumerate(self.states)}
        self.actions: list[list[Allocation]] = []
        self.outcomes: list[list[list[tuple[int, float, float]]]] = []
        signature_cache: dict[tuple, list[Allocation]] = {}
        for agents in self.states:
            js = JointState(agents, 0)
            sig = _frontier_signature(js, model)
            acts = signature_cache.get(sig)
            if acts is None:
                acts = _actions_for_signature(sig)
                signature_cache[sig] = acts
            self.actions.append(acts)
            per_action = []
            for alloc in acts:
                branches = [
                    _agent_outcomes(model.agents[i], st, alloc.resource_for(i) is not None)
                    for i, st in enumerate(agents)
                ]
                dist: dict[int, tuple[float, float]] = {}
                for combo in itertools.product(*branches):
                    p = 1.0
                    rew = 0.0
                    key = tuple(c[0] for c in combo)
                    for _, pi, ri in combo:
                        p *= pi
                        rew += ri
                    j = self.index[key]
                    if j in dist:
                        pj, rj = dist[j]
                        # merge identical successors, reward-weighted
                        dist[j] = (pj + p, (rj * pj + rew * p) / (pj + p))
                    else:
                        dist[j] = (p, rew)
                per_action.append([(j, p, r) for j, (p, r) in sorted(dist.items())])
            self.outcomes.append(per_action)


@dataclass
class JointValueResult:
    """Exact finite-horizon values and greedy policy on the joint space."""

    space: _JointSpace
    values: np.ndarray  # (horizon+1, n_states)
    policy: list[list[Optional[int]]]  # action index per (t, state)

    def value(self, t: int, state: JointState | tuple) -> float:
        key = state.agents if isinstance(state, JointState) else tuple(state)
        return float(self.values[t, self.space.index[key]])

    def policy_action(self, t: int, state: JointState | tuple) -> Allocation:
        key = state.agents if isinstance(state, JointState) else tuple(state)
        i = self.space.index[key]
        return self.space.actions[i][self.policy[t][i]]

    def action_values(self, t: int, state: JointState | tuple) -> list[tuple[Allocation, float]]:
        key = state.agents if isinstance(state, JointState) else tuple(state)
        i = self.space.index[key]
        v_next = self.values[t + 1]
        out = []
        for a_idx, alloc in enumerate(self.space.actions[i]):
            q = sum(p * (rew + v_next[j]) for j, p, rew in self.space.outcomes[i][a_idx])
            out.append((alloc, float(q)))
        return out

    def optimal_actions(self, t: int, state: JointState | tuple, tol: float = 1e-9) -> list[Allocation]:
        qs = self.action_values(t, state)
        best = max(q for _, q in qs)
        return [a for a, q in qs if q >= best - tol]


def joint_value_iteration(model: JointModel, cap: int = DEFAULT_STATE_CAP) -> JointValueResult:
    """Exact undiscounted backward induction over the full joint space.

    Refuses instances whose unfactored state count exceeds ``cap``; this
    is the optimality oracle the approximate methods are tested against.
    """
    space = _JointSpace(model, cap)
    n = len(space.states)
    tau = model.horizon
    values = np.zeros((tau + 1, n))
    policy: list[list[Optional[int]]] = [[None] * n for _ in range(tau)]
    for t in range(tau - 1, -1, -1):
        v_next = values[t + 1]
        for i in range(n):
            best = -math.inf
            best_a = 0
            for a_idx, dist in enumerate(space.outcomes[i]):
                q = 0.0
                for j, p, rew in dist:
                    q += p * (rew + v_next[j])
                if q > best:
                    best = q
                    best_a = a_idx
            values[t, i] = best
            policy[t][i] = best_a
    return JointValueResult(space, values, policy)


# --------------------------------------------------------------------------
# UCT


@dataclass
class UctResult:
    allocation: Allocation
    rollouts: int
    flagged: bool
    root_stats: list[tuple[Allocation, int, float]] = field(default_factory=list)


class _Node:
    __slots__ = ("n", "actions", "counts", "sums")

    def __init__(self, actions: list[Allocation]):
        self.n = 0
        self.actions = actions
        self.counts = [0] * len(actions)
        self.sums = [0.0] * len(actions)


def _select(node: _Node, c: float) -> int:
    for j, cnt in enumerate(node.counts):
        if cnt == 0:
            return j
    log_n = math.log(node.n)
    best = -math.inf
    best_j = 0
    for j, cnt in enumerate(node.counts):
        u = node.sums[j] / cnt + c * math.sqrt(2.0 * log_n / cnt)
        if u > best:
            best = u
            best_j = j
    return best_j


def uct_plan(
    state: JointState,
    model: JointModel,
    rng: Optional[np.random.Generator] = None,
    *,
    iterations: Optional[int] = None,
    timeout_ms: Optional[float] = None,
    rollout_horizon: Optional[int] = None,
    exploration: float = DEFAULT_EXPLORATION,
    compiled: Optional["CompiledJointModel"] = None,
    seed: Optional[int] = None,
) -> UctResult:
    """Rollout-based planning from ``state``: UCB1 inside the tree,
    uniform-random feasible actions beyond it, undiscounted returns backed
    up to the root.  Stops at the iteration budget or the wall-clock
    timeout; returns the root action with the highest mean return.

    With a :class:`CompiledJointModel` and an iteration budget the search
    runs in the compiled kernel (deterministic given ``seed``).
    """
    if iterations is None and timeout_ms is None:
        raise ValueError("need an iteration budget or a timeout")
    if iterations is not None and iterations < 1:
        raise ValueError("iterations must be >= 1")
    root_actions = feasible_joint_actions(state, model)
    if len(root_actions) == 1:
        return UctResult(root_actions[0], 0, False, [(root_actions[0], 0, 0.0)])

    if compiled is not None and iterations is not None:
        if seed is None:
            if rng is None:
                raise ValueError("compiled search needs a seed or an rng")
            seed = int(rng.integers(2**31 - 1))
        return compiled.plan(state, iterations, exploration, seed)

    if rng is None:
        rng = np.random.default_rng(seed)
    tau = model.horizon
    if state.time >= tau:
        raise DomainError("cannot plan at or past the horizon")
    max_rollout = rollout_horizon if rollout_horizon is not None else tau

    nodes: dict[tuple, _Node] = {}
    action_cache: dict[tuple, list[Allocation]] = {}

    def actions_for(s: JointState) -> list[Allocation]:
        sig = _frontier_signature(s, model)
        acts = action_cache.get(sig)
        if acts is None:
            acts = _actions_for_signature(sig)
            action_cache[sig] = acts
        return acts

    deadline = None if timeout_ms is None else time.perf_counter() + timeout_ms / 1000.0
    completed = 0
    while True:
        if iterations is not None and completed >= iterations:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break

        s = state
        t = state.time
        path: list[tuple[_Node, int]] = []
        rewards: list[float] = []
        in_tree = True
        rollout_steps = 0
        while t < tau:
            if in_tree:
                key = (t, s.agents)
                node = nodes.get(key)
                if node is None:
                    node = _Node(actions_for(s))
                    nodes[key] = node
                    in_tree = False  # expand, then roll out below
                j = _select(node, exploration)
                path.append((node, j))
                alloc = node.actions[j]
            else:
                if rollout_steps >= max_rollout:
                    break
                acts = actions_for(s)
                alloc = acts[int(rng.integers(len(acts)))]
                rollout_steps += 1
            s, r, _ = step_environment(s, alloc, model, rng, validate=False)
            rewards.append(r)
            t += 1

        ret = 0.0
        suffix = [0.0] * len(rewards)
        for i in range(len(rewards) - 1, -1, -1):
            ret += rewards[i]
            suffix[i] = ret
        for i, (node, j) in enumerate(path):
            node.n += 1
            node.counts[j] += 1
            node.sums[j] += suffix[i]
        completed += 1

    if completed == 0:
        return UctResult(Allocation(), 0, True)
    root = nodes[(state.time, state.agents)]
    stats = [
        (alloc, cnt, (root.sums[j] / cnt) if cnt else 0.0)
        for j, (alloc, cnt) in enumerate(zip(root.actions, root.counts))
    ]
    best_j = max(
        (j for j, cnt in enumerate(root.counts) if cnt > 0),
        key=lambda j: root.sums[j] / root.counts[j],
    )
    return UctResult(root.actions[best_j], completed, False, stats)


@njit(cache=True)
def _uct_kernel(
    root, tau, iterations, c, seed, act_ptr, out_ptr, out_next, out_cum, out_rew, n_states, amax
):  # pragma: no cover - exercised through CompiledJointModel.plan
    np.random.seed(seed)
    visits = np.zeros((tau, n_states), np.int64)
    counts = np.zeros((tau, n_states, amax), np.int64)
    sums = np.zeros((tau, n_states, amax), np.float64)
    path_s = np.empty(tau, np.int64)
    path_a = np.empty(tau, np.int64)
    rewards = np.empty(tau, np.float64)

    for _ in range(iterations):
        s = root
        in_tree = True
        path_len = 0
        for t in range(tau):
            base = act_ptr[s]
            na = act_ptr[s + 1] - base
            if in_tree:
                if visits[t, s] == 0:
                    in_tree = False
                j = -1
                for k in range(na):
                    if counts[t, s, k] == 0:
                        j = k
                        break
                if j < 0:
                    log_n = math.log(visits[t, s])
                    best = -1e300
                    for k in range(na):
                        ck = counts[t, s, k]
                        u = sums[t, s, k] / ck + c * math.sqrt(2.0 * log_n / ck)
                        if u > best:
                            best = u
                            j = k
                path_s[path_len] = s
                path_a[path_len] = j
                path_len += 1
                a = base + j
            else:
                a = base + np.random.randint(na)
            lo = out_ptr[a]
            hi = out_ptr[a + 1] - 1
            u = np.random.random()
            while lo < hi:
                mid = (lo + hi) // 2
                if out_cum[mid] < u:
                    lo = mid + 1
                else:
                    hi = mid
            rewards[t] = out_rew[lo]
            s = out_next[lo]

        total = 0.0
        for t in range(tau - 1, -1, -1):
            total += rewards[t]
            if t < path_len:
                visits[t, path_s[t]] += 1
                counts[t, path_s[t], path_a[t]] += 1
                sums[t, path_s[t], path_a[t]] += total

    base = act_ptr[root]
    na = act_ptr[root + 1] - base
    best = -1e300
    best_j = 0
    for k in range(na):
        ck = counts[0, root, k]
        if ck > 0:
            v = sums[0, root, k] / ck
            if v > best:
                best = v
                best_j = k
    return best_j, counts[0, root, :na].copy(), sums[0, root, :na].copy()


class CompiledJointModel:
    """A joint model flattened to index tables so the UCT kernel can run
    without touching Python objects.  Only viable for instances whose
    joint state count fits under the cap."""

    def __init__(self, model: JointModel, cap: int = DEFAULT_STATE_CAP):
        self.model = model
        self.space = _JointSpace(model, cap)
        act_ptr = [0]
        out_ptr = [0]
        out_next: list[int] = []
        out_cum: list[float] = []
        out_rew: list[float] = []
        amax = 1
        for i in range(len(self.space.states)):
            acts = self.space.outcomes[i]
            amax = max(amax, len(acts))
            for dist in acts:
                acc = 0.0
                for j, p, rew in dist:
                    acc += p
                    out_next.append(j)
                    out_cum.append(acc)
                    out_rew.append(rew)
                out_cum[-1] = 1.0  # guard against float shortfall
                out_ptr.append(len(out_next))
            act_ptr.append(len(out_ptr) - 1)
        self.act_ptr = np.asarray(act_ptr, np.int64)
        self.out_ptr = np.asarray(out_ptr, np.int64)
        self.out_next = np.asarray(out_next, np.int64)
        self.out_cum = np.asarray(out_cum, np.float64)
        self.out_rew = np.asarray(out_rew, np.float64)
        self.amax = amax

    def plan(self, state: JointState, iterations: int, exploration: float, seed: int) -> UctResult:
        root = self.space.index[state.agents]
        tau = self.model.horizon - state.time
        if tau < 1:
            raise DomainError("cannot plan at or past the horizon")
        best_j, counts, sums = _uct_kernel(
            root,
            tau,
            iterations,
            exploration,
            seed,
            self.act_ptr,
            self.out_ptr,
            self.out_next,
            self.out_cum,
            self.out_rew,
            len(self.space.states),
            self.amax,
        )
        actions = self.space.actions[root]
        stats = [
            (alloc, int(counts[j]), float(sums[j] / counts[j]) if counts[j] else 0.0)
            for j, alloc in enumerate(actions)
        ]
        return UctResult(actions[int(best_j)], iterations, False, stats)
