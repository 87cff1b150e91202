"""Auction-coordinated MDP planning for multiagent resource allocation."""

from .agent_mdp import (
    RegretMatrix,
    ValueTable,
    bids,
    enumerate_states,
    expected_value,
    regret,
    solve,
    transition,
)
from .auction import (
    fcfs,
    iterative_auction,
    one_round_auction,
    optimal_matching,
    sickest_first,
    welfare,
)
from .domain import (
    AgentModel,
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
)
from .harness import METHODS, Episode, Scenario, TrialResult, run_episode, run_experiment, sweep
from .mmdp import (
    CompiledJointModel,
    JointModel,
    SizeCapError,
    UctResult,
    feasible_joint_actions,
    initial_state,
    joint_value_iteration,
    step_environment,
    uct_plan,
)
from .priors import (
    REWARD_TABLE,
    PriorConfig,
    alpha_health,
    alpha_resource,
    sample_agent_model,
    sample_dirichlet,
    sample_population,
)

__version__ = "0.1.0"
