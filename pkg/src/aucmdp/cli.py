"""Command-line entry point.

Subcommands: ``simulate`` (run an experiment from a config file),
``sweep`` (vary one axis), ``auction`` (run one allocation mechanism on a
bid-matrix CSV), and ``joint-dp`` (the exact joint oracle, size-capped).

Exit codes: 0 success, 2 configuration error, 3 size-cap refusal.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import auction as auction_mod
from .config import ConfigError, load_config
from .harness import METHODS, format_summary, run_experiment, sweep
from .mmdp import JointModel, SizeCapError, initial_state, joint_value_iteration
from .priors import sample_population

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZE_CAP = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aucmdp",
        description="Auction-coordinated MDP resource allocation: simulate, sweep, and inspect.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment from a config file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--method", choices=METHODS, help="override the configured method")
    sim.add_argument("--all-methods", action="store_true", help="run every method")
    sim.add_argument("--out", help="write per-trial results CSV here")
    sim.add_argument("--uct-timeout-ms", type=float, default=None)
    sim.add_argument("--uct-c", type=float, default=None, help="UCB1 exploration constant")
    sim.add_argument(
        "--uct-iterations",
        type=int,
        default=None,
        help="iteration budget; overrides the wall-clock timeout for reproducible runs",
    )
    sim.add_argument("--jobs", type=int, default=1)

    sw = sub.add_parser("sweep", help="run an experiment across one axis")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", required=True, choices=("agents", "resources", "totalResourceTypes"))
    sw.add_argument("--values", required=True, help="comma-separated integers, e.g. 2,4,6,8,10")
    sw.add_argument("--methods", help="comma-separated method list (default: configured method)")
    sw.add_argument("--out", help="write the sweep summary CSV here")
    sw.add_argument("--jobs", type=int, default=1)

    auc = sub.add_parser("auction", help="run one mechanism on a bid-matrix CSV")
    auc.add_argument("--matrix", required=True, help="CSV with header agent,resource,bid")
    auc.add_argument("--method", required=True, choices=("iter", "one-round", "optimal"))

    dp = sub.add_parser("joint-dp", help="exact joint value iteration (size-capped oracle)")
    dp.add_argument("--config", required=True)
    dp.add_argument("--cap", type=int, default=10**6)
    return parser


def _apply_overrides(scenario, args):
    updates = {}
    if args.method:
        updates["method"] = args.method
    if args.uct_timeout_ms is not None:
        updates["uct_timeout_ms"] = args.uct_timeout_ms
    if args.uct_iterations is not None:
        updates["uct_iterations"] = args.uct_iterations
    if args.uct_c is not None:
        updates["uct_exploration"] = args.uct_c
    return replace(scenario, **updates) if updates else scenario


def _cmd_simulate(args) -> int:
    scenario = _apply_overrides(load_config(args.config), args)
    methods = list(METHODS) if args.all_methods else [scenario.method]
    result = run_experiment(scenario, methods, out=args.out, n_jobs=args.jobs)
    print(format_summary(result))
    if args.out:
        print(f"wrote {len(result.rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = load_config(args.config)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated integers, got {args.values!r}")
    if not values:
        raise ConfigError("--values is empty")
    methods = [m.strip() for m in args.methods.split(",")] if args.methods else None
    if methods:
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
    rows = sweep(args.axis, values, scenario, methods, out=args.out, n_jobs=args.jobs)
    for row in rows:
        print(
            f"{row['axis']}={row['value']} {row['method']}: "
            f"{row['mean_avg_reward_per_patient']:.4f} ± {row['std']:.4f} "
            f"({row['n_trials']} trials)"
        )
    return EXIT_OK


def _cmd_auction(args) -> int:
    try:
        matrix = auction_mod.read_matrix_csv(args.matrix)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc))
    mechanism = {
        "iter": auction_mod.iterative_auction,
        "one-round": auction_mod.one_round_auction,
        "optimal": auction_mod.optimal_matching,
    }[args.method]
    allocation = mechanism(matrix)
    for resource, agent in allocation:
        print(f"agent {agent} <- resource {resource} (bid {matrix.entries[(agent, resource)]})")
    unassigned = sorted(set(matrix.agents) - {a for _, a in allocation})
    if unassigned:
        print(f"unassigned agents: {', '.join(map(str, unassigned))}")
    print(f"welfare {auction_mod.welfare(matrix, allocation)}")
    return EXIT_OK


def _cmd_joint_dp(args) -> int:
    scenario = load_config(args.config)
    _, models = sample_population(scenario.prior, scenario.horizon, scenario.seed)
    model = JointModel.from_agents(models)
    result = joint_value_iteration(model, cap=args.cap)
    root = initial_state(model)
    print(f"joint states enumerated: {len(result.space.states)}")
    print(f"optimal value at the initial state: {result.value(0, root)}")
    print(f"optimal first allocation: {result.policy_action(0, root).assignment or 'resign all'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "auction": _cmd_auction,
        "joint-dp": _cmd_joint_dp,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeCapError as exc:
        print(f"refusing exact joint computation: {exc}", file=sys.stderr)
        return EXIT_SIZE_CAP


if __name__ == "__main__":
    sys.exit(main())
