"""Single-agent planning: state enumeration, finite-horizon backward
induction, and the per-resource bid values (expected regret or expected
value) that feed the auction."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

import numpy as np

from .domain import (
    AgentModel,
    AgentState,
    DomainError,
    Health,
    Status,
    frontier_position,
)

# An agent action is a bid for one global resource id, or None to resign.
Action = Optional[int]


def enumerate_status_vectors(pathway_length: int) -> list[tuple[Status, ...]]:
    """All 2m+1 pathway-monotone status vectors for a pathway of length m:
    the m+1 had-prefix forms, then the m forms with an active ``have``."""
    if pathway_length < 1:
        raise DomainError("pathway length must be >= 1")
    m = pathway_length
    vectors = []
    for k in range(m + 1):
        vectors.append(tuple([Status.HAD] * k + [Status.NEED] * (m - k)))
    for k in range(m):
        vectors.append(tuple([Status.HAD] * k + [Status.HAVE] + [Status.NEED] * (m - k - 1)))
    return vectors


def enumerate_states(model: AgentModel) -> list[AgentState]:
    """All 3(2m+1)+1 reachable states: every monotone status vector times
    the three health levels, plus the absorbing discharged state."""
    m = len(model.condition.pathway)
    states = [
        AgentState(h, sv)
        for sv in enumerate_status_vectors(m)
        for h in Health
    ]
    states.append(AgentState(Health.HEALTHY, tuple([Status.HAD] * m), discharged=True))
    return states


def acquisition_probability(model: AgentModel, state: AgentState) -> float:
    """Chance the agent's bid succeeds, from its subjective obtention
    triple renormalized over the two legal one-step outcomes of a needed
    resource (need -> have or need -> need)."""
    p_have, _p_had, p_need = model.resource_obtention[(state.health, state.statuses)]
    total = p_have + p_need
    if total <= 0.0:
        raise DomainError(
            f"obtention triple puts no mass on legal outcomes in context "
            f"({state.health.text}, {state.statuses})"
        )
    return p_have / total


def _advance_statuses(statuses: tuple[Status, ...], acquired_pos: Optional[int]) -> tuple[Status, ...]:
    out = [Status.HAD if s is Status.HAVE else s for s in statuses]
    if acquired_pos is not None:
        out[acquired_pos] = Status.HAVE
    return tuple(out)


def _finish(health: Health, statuses: tuple[Status, ...]) -> AgentState:
    discharged = health is Health.HEALTHY and all(s is Status.HAD for s in statuses)
    return AgentState(health, statuses, discharged)


def available_actions(model: AgentModel, state: AgentState) -> list[Action]:
    """Bid on the frontier resource when one exists, resign always."""
    if state.discharged:
        return [None]
    pos = frontier_position(state.statuses)
    if pos is None:
        return [None]
    return [model.condition.pathway[pos], None]


def transition(model: AgentModel, state: AgentState, action: Action) -> dict[AgentState, float]:
    """One-step distribution over successor states.

    Resource side: an active ``have`` completes deterministically, and a
    bid on the frontier succeeds with the model's acquisition probability.
    Health side: the progression row for the pre-step statuses.
    """
    if state.discharged:
        return {state: 1.0}
    pos = frontier_position(state.statuses)
    if action is None:
        p_acq = 0.0
    else:
        if pos is None or model.condition.pathway[pos] != action:
            raise DomainError(
                f"bid on resource {action} which is not the frontier of {state.statuses}"
            )
        p_acq = acquisition_probability(model, state)

    omega = model.health_progression[(state.health, state.statuses)]
    branches = []
    if p_acq > 0.0:
        branches.append((_advance_statuses(state.statuses, pos), p_acq))
    if p_acq < 1.0:
        branches.append((_advance_statuses(state.statuses, None), 1.0 - p_acq))

    out: dict[AgentState, float] = {}
    for statuses_next, p_r in branches:
        for h_next, p_h in zip(Health, omega):
            if p_h == 0.0:
                continue
            s_next = _finish(h_next, statuses_next)
            out[s_next] = out.get(s_next, 0.0) + p_r * p_h
    return out


@dataclass
class ValueTable:
    """Time-indexed optimal values and greedy actions from backward
    induction.  V at the horizon is identically zero and discharged states
    carry zero value at every step."""

    horizon: int
    states: list[AgentState]
    _index: dict[AgentState, int] = field(repr=False)
    _values: np.ndarray = field(repr=False)   # (horizon+1, n_states)
    _actions: np.ndarray = field(repr=False)  # (horizon, n_states); resource id or -1

    def value(self, t: int, state: AgentState) -> float:
        return float(self._values[t, self._index[state]])

    def action(self, t: int, state: AgentState) -> Action:
        code = int(self._actions[t, self._index[state]])
        return None if code < 0 else code

    def to_csv(self, out: IO[str]) -> None:
        """Debug dump: one row per (t, state)."""
        writer = csv.writer(out)
        writer.writerow(["t", "health", "statuses", "value", "argmax_action"])
        for t in range(self.horizon + 1):
            for s in self.states:
                act = "" if t == self.horizon else self.action(t, s)
                writer.writerow(
                    [
                        t,
                        s.health.text,
                        "|".join(x.text for x in s.statuses),
                        repr(self.value(t, s)),
                        "resign" if act is None and t < self.horizon else act,
                    ]
                )


def solve(model: AgentModel, gamma: float = 1.0) -> ValueTable:
    """Undiscounted finite-horizon backward induction (gamma configurable
    but 1 by default).  Deterministic: ties between bidding and resigning
    prefer the bid."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    states = enumerate_states(model)
    n = len(states)
    index = {s: i for i, s in enumerate(states)}
    tau = model.horizon

    # Time-homogeneous dynamics: build dense one-step matrices once.
    p_resign = np.zeros((n, n))
    r_resign = np.zeros(n)
    p_bid = np.zeros((n, n))
    r_bid = np.zeros(n)
    has_bid = np.zeros(n, dtype=bool)
    bid_resource = np.full(n, -1, dtype=np.int64)

    for i, s in enumerate(states):
        for a in available_actions(model, s):
            dist = transition(model, s, a)
            p_mat, r_vec = (p_resign, r_resign) if a is None else (p_bid, r_bid)
            for s_next, p in dist.items():
                j = index[s_next]
                p_mat[i, j] += p
                if not s.discharged:
                    r_vec[i] += p * model.phi(s.health, s_next.health)
            if a is not None:
                has_bid[i] = True
                bid_resource[i] = a

    values = np.zeros((tau + 1, n))
    actions = np.full((tau, n), -1, dtype=np.int64)
    for t in range(tau - 1, -1, -1):
        v_next = values[t + 1]
        q_resign = r_resign + gamma * (p_resign @ v_next)
        q_bid = np.where(has_bid, r_bid + gamma * (p_bid @ v_next), -np.inf)
        take_bid = has_bid & (q_bid >= q_resign)
        values[t] = np.where(take_bid, q_bid, q_resign)
        actions[t] = np.where(take_bid, bid_resource, -1)

    return ValueTable(tau, states, index, values, actions)


def _health_expectation(
    model: AgentModel,
    table: ValueTable,
    state: AgentState,
    t: int,
    statuses_next: tuple[Status, ...],
) -> float:
    omega = model.health_progression[(state.health, state.statuses)]
    return sum(
        p * table.value(t + 1, _finish(h_next, statuses_next))
        for h_next, p in zip(Health, omega)
        if p > 0.0
    )


def _frontier_pos_checked(model: AgentModel, state: AgentState, t: int, resource: int) -> int:
    if state.discharged:
        raise DomainError("discharged agents hold no frontier")
    if t >= model.horizon:
        raise DomainError(f"step {t} is at or past the horizon {model.horizon}")
    pos = frontier_position(state.statuses)
    if pos is None or model.condition.pathway[pos] != resource:
        raise DomainError(f"resource {resource} is not the frontier of {state.statuses}")
    return pos


def expected_value(
    model: AgentModel, table: ValueTable, state: AgentState, t: int, resource: int
) -> float:
    """Myopic expected value of holding the frontier resource next step:
    the continuation value after receipt, averaged over health progression."""
    pos = _frontier_pos_checked(model, state, t, resource)
    received = _advance_statuses(state.statuses, pos)
    return _health_expectation(model, table, state, t, received)


def regret(
    model: AgentModel, table: ValueTable, state: AgentState, t: int, resource: int
) -> float:
    """Expected regret for not receiving the frontier resource: the value
    difference between the received and unchanged resource outcomes, with
    every other status held fixed.  Not clamped; can be negative under
    adversarial models."""
    pos = _frontier_pos_checked(model, state, t, resource)
    received = _advance_statuses(state.statuses, pos)
    kept = state.statuses
    return _health_expectation(model, table, state, t, received) - _health_expectation(
        model, table, state, t, kept
    )


def bids(
    model: AgentModel,
    table: ValueTable,
    state: AgentState,
    t: int,
    mode: str = "regret",
) -> list[tuple[int, float]]:
    """The agent's bid list for this step: a single (resource, bid) on the
    frontier, or empty when the agent has nothing to bid for (it then
    implicitly resigns)."""
    if mode not in ("regret", "value"):
        raise ValueError(f"unknown bid mode {mode!r}")
    if state.discharged:
        return []
    pos = frontier_position(state.statuses)
    if pos is None:
        return []
    resource = model.condition.pathway[pos]
    if mode == "regret":
        return [(resource, regret(model, table, state, t, resource))]
    return [(resource, expected_value(model, table, state, t, resource))]


@dataclass
class RegretMatrix:
    """Per-(agent, resource) bid values feeding an auction."""

    entries: dict[tuple[int, int], float]
    mode: str = "regret"

    def __post_init__(self):
        for key, bid in self.entries.items():
            if not np.isfinite(bid):
                raise DomainError(f"non-finite bid {bid} for {key}")

    @property
    def agents(self) -> list[int]:
        return sorted({a for a, _ in self.entries})

    @property
    def resources(self) -> list[int]:
        return sorted({r for _, r in self.entries})
