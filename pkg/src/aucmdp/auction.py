"""Per-step coordination mechanisms.

The iterative auction (unassigned agents repeatedly bid their best
remaining resource), the one-round variant, two healthcare heuristics
(sickest-first and first-come-first-served), and an exact max-weight
matching used as the optimality yardstick.

Tie-breaking is deterministic throughout: equal top bids on a resource go
to the lower agent index, and equal bids within one agent's list are
tried in ascending resource-id order.
"""

from __future__ import annotations

import csv
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .agent_mdp import RegretMatrix
from .domain import Allocation, Health, nu

Bids = Union[RegretMatrix, dict]


def _entries(bids: Bids) -> dict[tuple[int, int], float]:
    if isinstance(bids, RegretMatrix):
        return bids.entries
    return dict(bids)


def welfare(bids: Bids, allocation: Allocation) -> float:
    """Total bid value collected by an allocation."""
    entries = _entries(bids)
    return sum(entries[(a, r)] for r, a in allocation)


def iterative_auction_rounds(
    bids: Bids, allow_nonpositive: bool = False
) -> tuple[Allocation, int]:
    """Like :func:`iterative_auction` but also reports the round count."""
    entries = _entries(bids)
    prefs: dict[int, list[tuple[float, int]]] = {}
    for (agent, resource), bid in entries.items():
        prefs.setdefault(agent, []).append((bid, resource))
    for agent in prefs:
        prefs[agent].sort(key=lambda br: (-br[0], br[1]))

    remaining = {r for _, r in entries}
    active = sorted(prefs)
    assigned: dict[int, int] = {}
    rounds = 0
    while active:
        proposals: dict[int, list[tuple[float, int]]] = {}
        bidders = []
        for agent in active:
            choice = next(
                (
                    (bid, resource)
                    for bid, resource in prefs[agent]
                    if resource in remaining and (allow_nonpositive or bid > 0.0)
                ),
                None,
            )
            if choice is None:
                continue  # resigns for this step
            bid, resource = choice
            proposals.setdefault(resource, []).append((bid, agent))
            bidders.append(agent)
        if not proposals:
            break
        rounds += 1
        winners = set()
        for resource in sorted(proposals):
            bid, agent = max(proposals[resource], key=lambda ba: (ba[0], -ba[1]))
            assigned[resource] = agent
            winners.add(agent)
            remaining.discard(resource)
        active = [a for a in bidders if a not in winners]
    return Allocation.from_assignment(assigned), rounds


def iterative_auction(bids: Bids, allow_nonpositive: bool = False) -> Allocation:
    """Repeated rounds: every unassigned agent bids on its highest-valued
    remaining resource, the highest bidder per resource wins it, losers
    move on to their next choice.  Agents with only non-positive bids left
    resign (configurable off)."""
    allocation, _ = iterative_auction_rounds(bids, allow_nonpositive)
    return allocation


def one_round_auction(bids: Bids, allow_nonpositive: bool = False) -> Allocation:
    """A single award: only the globally highest (agent, resource) bid is
    granted; everyone else waits."""
    entries = _entries(bids)
    candidates = [
        (bid, agent, resource)
        for (agent, resource), bid in entries.items()
        if allow_nonpositive or bid > 0.0
    ]
    if not candidates:
        return Allocation()
    bid, agent, resource = max(candidates, key=lambda bar: (bar[0], -bar[1], -bar[2]))
    return Allocation(((resource, agent),))


def optimal_matching(bids: Bids) -> Allocation:
    """Exact maximum-total-bid assignment.  Agents whose best use is no
    resource at all (only non-positive bids) stay unassigned."""
    entries = _entries(bids)
    if not entries:
        return Allocation()
    agents = sorted({a for a, _ in entries})
    resources = sorted({r for _, r in entries})
    weights = np.zeros((len(agents), len(resources)))
    for (a, r), bid in entries.items():
        weights[agents.index(a), resources.index(r)] = bid
    rows, cols = linear_sum_assignment(np.clip(weights, 0.0, None), maximize=True)
    pairs = []
    for i, j in zip(rows, cols):
        key = (agents[i], resources[j])
        if key in entries and entries[key] > 0.0:
            pairs.append((resources[j], agents[i]))
    return Allocation(tuple(pairs))


def sickest_first(
    agents: Iterable[tuple[int, Health, float, Optional[int]]]
) -> Allocation:
    """Grant frontier resources in order of worsening health, then higher
    criticality, then arrival (index) order."""
    ordered = sorted(agents, key=lambda e: (-nu(e[1]), -e[2], e[0]))
    taken: dict[int, int] = {}
    for index, _health, _crit, front in ordered:
        if front is not None and front not in taken:
            taken[front] = index
    return Allocation.from_assignment(taken)


def fcfs(agents: Iterable[tuple[int, Optional[int]]]) -> Allocation:
    """First-come, first-served: arrival (index) order, each agent granted
    its frontier resource if still free."""
    taken: dict[int, int] = {}
    for index, front in sorted(agents, key=lambda e: e[0]):
        if front is not None and front not in taken:
            taken[front] = index
    return Allocation.from_assignment(taken)


def read_matrix_csv(path) -> RegretMatrix:
    """Load a bid matrix from CSV with header ``agent,resource,bid``."""
    entries: dict[tuple[int, int], float] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != [
            "agent",
            "resource",
            "bid",
        ]:
            raise ValueError(f"expected header 'agent,resource,bid' in {path}")
        for row in reader:
            entries[(int(row["agent"]), int(row["resource"]))] = float(row["bid"])
    return RegretMatrix(entries)
