"""Experiment runner: seeded episodes under each coordination method,
trial/repeat aggregation, and CSV output."""

from __future__ import annotations

import csv
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import IO, Optional, Sequence

import numpy as np

from . import agent_mdp, auction
from .agent_mdp import RegretMatrix, ValueTable, bids, solve
from .domain import Allocation, JointState, frontier
from .mmdp import (
    DEFAULT_EXPLORATION,
    CompiledJointModel,
    JointModel,
    SizeCapError,
    initial_state,
    step_environment,
    uct_plan,
)
from .priors import PriorConfig, sample_population

METHODS = (
    "aucmdp-regiter",
    "aucmdp-reg",
    "aucmdp-iter",
    "fcfs",
    "sickest",
    "uct",
)
AUCMDP_METHODS = frozenset({"aucmdp-regiter", "aucmdp-reg", "aucmdp-iter"})

CSV_COLUMNS = (
    "method",
    "N",
    "M",
    "D",
    "tau",
    "repeat",
    "trial",
    "seed",
    "avg_reward_per_patient",
    "wall_clock_ms",
)

# Enumerated joint spaces above this size are not worth compiling for UCT.
_COMPILE_CAP = 5000


@dataclass(frozen=True)
class Scenario:
    """A full experiment description.  ``tau=None`` applies the default
    horizon rule of ten steps per agent."""

    prior: PriorConfig
    method: str = "aucmdp-regiter"
    tau: Optional[int] = None
    trials: int = 1
    repeats: int = 1
    seed: int = 0
    uct_timeout_ms: Optional[float] = None
    uct_iterations: Optional[int] = None
    uct_exploration: float = DEFAULT_EXPLORATION
    uct_rollout_horizon: Optional[int] = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.trials < 1 or self.repeats < 1:
            raise ValueError("trials and repeats must be >= 1")

    @property
    def horizon(self) -> int:
        return self.tau if self.tau is not None else 10 * self.prior.n_agents


@dataclass
class TrialResult:
    per_agent_return: tuple[float, ...]
    avg_reward_per_patient: float
    wall_clock_ms: float  # planning + allocation compute time, not simulation bookkeeping
    method: str
    seed: int


def derive_trial_seed(base_seed: int, repeat: int, trial: int) -> int:
    """Stable per-trial seed; independent of the method, so every method
    sees the same sampled patients for a given (repeat, trial)."""
    return int(np.random.SeedSequence([base_seed, repeat, trial]).generate_state(1)[0])


class Episode:
    """One trial: sampled patients, per-step allocation by the chosen
    method, environment stepping, reward bookkeeping.

    Exposed as a steppable object so audits can inspect every allocation.
    """

    def __init__(self, scenario: Scenario, trial_seed: int, method: Optional[str] = None,
                 population=None):
        self.scenario = scenario
        self.method = method or scenario.method
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.trial_seed = trial_seed
        self.horizon = scenario.horizon

        ss = np.random.SeedSequence(trial_seed)
        pop_ss, env_ss, uct_ss = ss.spawn(3)
        if population is None:
            self.profiles, self.models = sample_population(scenario.prior, self.horizon, pop_ss)
        else:
            self.profiles, self.models = population
            if any(m.horizon != self.horizon for m in self.models):
                raise ValueError("provided models disagree with the scenario horizon")
        self.env_rng = np.random.default_rng(env_ss)
        self.uct_rng = np.random.default_rng(uct_ss)

        self.joint = JointModel.from_agents(self.models)
        self.state = self.joint_state = initial_state(self.joint)
        self.per_agent = np.zeros(len(self.models))
        self.total_reward = 0.0
        self.compute_seconds = 0.0

        self.tables: Optional[list[ValueTable]] = None
        if self.method in AUCMDP_METHODS:
            start = time.perf_counter()
            self.tables = [solve(m, scenario.gamma) for m in self.models]
            self.compute_seconds += time.perf_counter() - start

        self._compiled: Optional[CompiledJointModel] = None
        if self.method == "uct" and scenario.uct_iterations is not None:
            n_joint = 1
            for m in self.models:
                n_joint *= 3 * (2 * len(m.condition.pathway) + 1) + 1
            if n_joint <= _COMPILE_CAP:
                try:
                    self._compiled = CompiledJointModel(self.joint)
                except SizeCapError:
                    self._compiled = None

    def _bid_matrix(self, mode: str) -> RegretMatrix:
        entries = {}
        for i, st in enumerate(self.state.agents):
            for resource, bid in bids(self.models[i], self.tables[i], st, self.state.time, mode):
                entries[(i, resource)] = bid
        return RegretMatrix(entries, mode)

    def allocation(self) -> Allocation:
        method = self.method
        if method == "aucmdp-regiter":
            return auction.iterative_auction(self._bid_matrix("regret"))
        if method == "aucmdp-reg":
            return auction.one_round_auction(self._bid_matrix("regret"))
        if method == "aucmdp-iter":
            # Value bids are whole continuation values, not net benefits: a
            # negative bid still marks a real need, so resignation on
            # non-positive bids is disabled for this variant.
            return auction.iterative_auction(self._bid_matrix("value"), allow_nonpositive=True)
        if method == "fcfs":
            return auction.fcfs(
                (i, frontier(st, self.models[i].condition))
                for i, st in enumerate(self.state.agents)
                if not st.discharged
            )
        if method == "sickest":
            return auction.sickest_first(
                (i, st.health, self.models[i].condition.criticality,
                 frontier(st, self.models[i].condition))
                for i, st in enumerate(self.state.agents)
                if not st.discharged
            )
        # uct
        sc = self.scenario
        iterations = sc.uct_iterations
        timeout = None
        if iterations is None:
            timeout = sc.uct_timeout_ms if sc.uct_timeout_ms is not None else 1000.0
        result = uct_plan(
            self.state,
            self.joint,
            rng=self.uct_rng,
            iterations=iterations,
            timeout_ms=timeout,
            rollout_horizon=sc.uct_rollout_horizon,
            exploration=sc.uct_exploration,
            compiled=self._compiled,
        )
        if result.flagged:
            warnings.warn(
                f"UCT completed no rollouts within {timeout} ms at step {self.state.time}; "
                f"resigning for this step"
            )
        return result.allocation

    def step(self) -> tuple[Allocation, tuple[float, ...]]:
        start = time.perf_counter()
        alloc = self.allocation()
        self.compute_seconds += time.perf_counter() - start
        self.state, total, rewards = step_environment(self.state, alloc, self.joint, self.env_rng)
        self.per_agent += rewards
        self.total_reward += total
        return alloc, rewards

    @property
    def done(self) -> bool:
        return self.state.time >= self.horizon

    def run(self) -> TrialResult:
        while not self.done:
            self.step()
        per_agent = tuple(float(x) for x in self.per_agent)
        return TrialResult(
            per_agent_return=per_agent,
            avg_reward_per_patient=float(np.mean(per_agent)),
            wall_clock_ms=self.compute_seconds * 1000.0,
            method=self.method,
            seed=self.trial_seed,
        )


def run_episode(scenario: Scenario, trial_seed: int, method: Optional[str] = None,
                population=None) -> TrialResult:
    return Episode(scenario, trial_seed, method, population).run()


def _run_job(args) -> TrialResult:
    scenario, method, seed = args
    return run_episode(scenario, seed, method)


@dataclass
class ExperimentResult:
    rows: list[dict]
    summaries: list[dict]  # one per (method, repeat): mean/std across trials

    def method_mean(self, method: str) -> float:
        vals = [r["avg_reward_per_patient"] for r in self.rows if r["method"] == method]
        return float(np.mean(vals))

    def method_values(self, method: str) -> list[float]:
        return [r["avg_reward_per_patient"] for r in self.rows if r["method"] == method]


def run_experiment(
    scenario: Scenario,
    methods: Optional[Sequence[str]] = None,
    out: Optional[str] = None,
    n_jobs: int = 1,
) -> ExperimentResult:
    """Run trials x repeats for each method with per-trial seeds derived
    from the scenario seed.  Deterministic given the scenario (apart from
    the wall-clock column); rows are emitted in seed order regardless of
    worker scheduling."""
    methods = list(methods) if methods else [scenario.method]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")

    jobs = [
        (method, rep, trial, derive_trial_seed(scenario.seed, rep, trial))
        for method in methods
        for rep in range(scenario.repeats)
        for trial in range(scenario.trials)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_job, [(scenario, m, s) for m, _, _, s in jobs]))
    else:
        results = [run_episode(scenario, s, m) for m, _, _, s in jobs]

    prior = scenario.prior
    rows = []
    for (method, rep, trial, seed), tr in zip(jobs, results):
        rows.append(
            {
                "method": method,
                "N": prior.n_agents,
                "M": prior.n_resources,
                "D": prior.n_conditions,
                "tau": scenario.horizon,
                "repeat": rep,
                "trial": trial,
                "seed": seed,
                "avg_reward_per_patient": tr.avg_reward_per_patient,
                "wall_clock_ms": tr.wall_clock_ms,
            }
        )

    summaries = []
    for method in methods:
        for rep in range(scenario.repeats):
            vals = [
                r["avg_reward_per_patient"]
                for r in rows
                if r["method"] == method and r["repeat"] == rep
            ]
            summaries.append(
                {
                    "method": method,
                    "repeat": rep,
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                    "n_trials": len(vals),
                }
            )

    result = ExperimentResult(rows, summaries)
    if out is not None:
        with open(out, "w", newline="") as f:
            write_results_csv(rows, f)
    return result


def write_results_csv(rows: Sequence[dict], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row["method"],
                row["N"],
                row["M"],
                row["D"],
                row["tau"],
                row["repeat"],
                row["trial"],
                row["seed"],
                repr(float(row["avg_reward_per_patient"])),
                repr(float(row["wall_clock_ms"])),
            ]
        )


def format_summary(result: ExperimentResult) -> str:
    lines = ["method            repeat  trials  mean ± std"]
    for s in result.summaries:
        lines.append(
            f"{s['method']:<17} {s['repeat']:>6}  {s['n_trials']:>6}  "
            f"{s['mean']:.4f} ± {s['std']:.4f}"
        )
    return "\n".join(lines)


def _apply_axis(scenario: Scenario, axis: str, value: int) -> Scenario:
    prior = scenario.prior
    if axis == "agents":
        prior = replace(prior, n_agents=value)
    elif axis == "resources":
        prior = replace(prior, pathway_length=value)
    elif axis == "totalResourceTypes":
        prior = replace(prior, n_resources=value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return replace(scenario, prior=prior)


SWEEP_COLUMNS = ("axis", "value", "method", "mean_avg_reward_per_patient", "std", "n_trials")


def sweep(
    axis: str,
    values: Sequence[int],
    scenario: Scenario,
    methods: Optional[Sequence[str]] = None,
    out: Optional[str] = None,
    n_jobs: int = 1,
) -> list[dict]:
    """Run the experiment across one axis; one output row per
    (value, method), pooled across repeats."""
    if not values:
        raise ValueError("sweep needs at least one value")
    methods = list(methods) if methods else [scenario.method]
    rows = []
    for value in values:
        result = run_experiment(_apply_axis(scenario, axis, value), methods, n_jobs=n_jobs)
        for method in methods:
            vals = result.method_values(method)
            rows.append(
                {
                    "axis": axis,
                    "value": value,
                    "method": method,
                    "mean_avg_reward_per_patient": float(np.mean(vals)),
                    "std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                    "n_trials": len(vals),
                }
            )
    if out is not None:
        with open(out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([row[c] for c in SWEEP_COLUMNS])
    return rows
