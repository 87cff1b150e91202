import math

import pytest
from hypothesis import given, strategies as st

from aucmdp.domain import (
    AgentState,
    Allocation,
    ConditionProfile,
    DomainError,
    Health,
    JointState,
    Status,
    count_joint_actions,
    count_joint_states,
    frontier,
    frontier_position,
    is_monotone,
    nu,
    nu_prime,
)

statuses_strategy = st.lists(st.sampled_from(list(Status)), min_size=1, max_size=6).map(tuple)


def reference_monotone(sv):
    # independent re-statement: had* (have)? need*
    text = "".join({Status.HAD: "d", Status.HAVE: "v", Status.NEED: "n"}[s] for s in sv)
    import re

    return re.fullmatch(r"d*v?n*", text) is not None


class TestEnums:
    def test_health_order_and_encodings(self):
        assert list(Health) == [Health.HEALTHY, Health.SICK, Health.CRITICAL]
        assert [nu(h) for h in Health] == [0, 1, 2]
        assert [nu_prime(h) for h in Health] == [1, 5, 10]

    def test_health_text_round_trip(self):
        for h in Health:
            assert Health.from_text(h.text) is h
        assert Health.from_text("sick") is Health.SICK
        with pytest.raises(DomainError):
            Health.from_text("dead")

    def test_status_text_round_trip(self):
        for s in Status:
            assert Status.from_text(s.text) is s
        with pytest.raises(DomainError):
            Status.from_text("pending")


class TestMonotonicity:
    @given(statuses_strategy)
    def test_matches_reference_predicate(self, sv):
        assert is_monotone(sv) == reference_monotone(sv)

    def test_frontier_position_examples(self):
        assert frontier_position((Status.NEED,)) == 0
        assert frontier_position((Status.HAD, Status.NEED)) == 1
        assert frontier_position((Status.HAD, Status.HAD)) is None
        assert frontier_position((Status.HAVE, Status.NEED)) is None

    def test_frontier_position_rejects_broken_vector(self):
        with pytest.raises(DomainError):
            frontier_position((Status.NEED, Status.HAD))


class TestConditionProfile:
    def test_valid(self):
        p = ConditionProfile(0, 1.5, (2, 0, 1))
        assert p.pathway == (2, 0, 1)

    @pytest.mark.parametrize("crit", [0.5, 2.5])
    def test_criticality_bounds(self, crit):
        with pytest.raises(DomainError):
            ConditionProfile(0, crit, (0,))

    def test_empty_pathway(self):
        with pytest.raises(DomainError):
            ConditionProfile(0, 1.0, ())

    def test_duplicate_resources(self):
        with pytest.raises(DomainError):
            ConditionProfile(0, 1.0, (1, 1))

    def test_round_trip(self):
        p = ConditionProfile(3, 1.25, (4, 2))
        assert ConditionProfile.from_dict(p.to_dict()) == p


class TestAgentState:
    def test_rejects_non_monotone(self):
        with pytest.raises(DomainError):
            AgentState(Health.SICK, (Status.NEED, Status.HAD))

    def test_discharged_requires_healthy_all_had(self):
        AgentState(Health.HEALTHY, (Status.HAD,), discharged=True)
        with pytest.raises(DomainError):
            AgentState(Health.SICK, (Status.HAD,), discharged=True)
        with pytest.raises(DomainError):
            AgentState(Health.HEALTHY, (Status.NEED,), discharged=True)

    def test_round_trip(self):
        s = AgentState(Health.CRITICAL, (Status.HAD, Status.NEED))
        assert AgentState.from_dict(s.to_dict()) == s
        d = AgentState(Health.HEALTHY, (Status.HAD,), discharged=True)
        assert AgentState.from_dict(d.to_dict()) == d

    def test_frontier_uses_pathway_ids(self):
        profile = ConditionProfile(0, 1.0, (7, 3))
        s = AgentState(Health.SICK, (Status.HAD, Status.NEED))
        assert frontier(s, profile) == 3
        with pytest.raises(DomainError):
            frontier(AgentState(Health.SICK, (Status.NEED,)), profile)


class TestJointState:
    def test_round_trip(self):
        js = JointState(
            (AgentState(Health.SICK, (Status.NEED,)), AgentState(Health.CRITICAL, (Status.HAVE,))),
            time=3,
        )
        assert JointState.from_dict(js.to_dict()) == js

    def test_negative_time(self):
        with pytest.raises(DomainError):
            JointState((), time=-1)


class TestAllocation:
    def test_injective_both_ways(self):
        with pytest.raises(DomainError):
            Allocation(((0, 1), (0, 2)))  # resource twice
        with pytest.raises(DomainError):
            Allocation(((0, 1), (2, 1)))  # agent twice

    def test_accessors(self):
        a = Allocation(((2, 0), (1, 3)))
        assert a.pairs == ((1, 3), (2, 0))  # sorted by resource
        assert a.assignment == {1: 3, 2: 0}
        assert a.resource_for(3) == 1
        assert a.resource_for(9) is None
        assert len(a) == 2

    def test_from_assignment_round_trip(self):
        a = Allocation.from_assignment({5: 1, 2: 0})
        assert Allocation.from_dict(a.to_dict()) == a

    @given(
        st.dictionaries(st.integers(0, 10), st.integers(0, 10), max_size=8).filter(
            lambda d: len(set(d.values())) == len(d)
        )
    )
    def test_any_injective_map_representable(self, assignment):
        a = Allocation.from_assignment(assignment)
        assert a.assignment == assignment


class TestCounts:
    def test_joint_state_count(self):
        assert count_joint_states(1, 1) == 3 * 3
        assert count_joint_states(2, 2) == 3**2 * 3**4
        # arbitrary precision: N=50, M=20 far exceeds 2**64
        assert count_joint_states(50, 20) == 3**50 * 3**1000

    def test_joint_action_count(self):
        assert count_joint_actions(4, 4) == math.factorial(4)
        assert count_joint_actions(10, 4) == 10 * 9 * 8 * 7
        with pytest.raises(ValueError):
            count_joint_actions(2, 3)
        with pytest.raises(ValueError):
            count_joint_states(0, 1)
