"""Command-line front end.

    dexsim run    --scenario FILE [--order dfs|bfs] [--trace-out FILE]
                  [--check] [--strict-blocks]
    dexsim fuzz   [--seed N] [--runs K] [--blocks B] [--users U]
                  [--order both|dfs|bfs] [--mutate NAME]
    dexsim replay [--seed N] --prefix P [--blocks B] [--users U] [--order dfs|bfs]

Exit codes: 0 success, 1 parse/IO error, 2 invariant or check failure.
The default seed comes from the SIM_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import cpmm, fa12
from .chain import ExecOrder
from .checks import check_order_robustness, run_all_checks, summarize
from .harness import ScenarioConfig, gen_trace
from .scenario import (
    ScenarioError,
    check_scenario,
    load_scenario,
    run_scenario,
)

ORDERS = {"dfs": ExecOrder.DEPTH_FIRST, "bfs": ExecOrder.BREADTH_FIRST}


def _default_seed() -> int:
    try:
        return int(os.environ.get("SIM_SEED", "0"))
    except ValueError:
        return 0


def _mutation_config(mutate: Optional[str], seed: int, blocks: int, users: int, order) -> ScenarioConfig:
    cpmm_mut = mutate if mutate in cpmm.MUTATIONS else None
    fa12_mut = mutate if mutate in fa12.MUTATIONS else None
    if mutate is not None and cpmm_mut is None and fa12_mut is None:
        raise SystemExit(f"unknown mutation {mutate!r}; known: "
                         f"{', '.join(cpmm.MUTATIONS + fa12.MUTATIONS)}")
    return ScenarioConfig(
        seed=seed,
        blocks=blocks,
        users=users,
        order=order,
        cpmm_mutation=cpmm_mut,
        fa12_mutation=fa12_mut,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.scenario) as f:
            scenario = load_scenario(f.read())
    except (OSError, ScenarioError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    result = run_scenario(scenario, ORDERS[args.order])
    lines = [json.dumps(r, sort_keys=True) for r in result.records]
    if args.trace_out:
        try:
            with open(args.trace_out, "w") as f:
                f.write("\n".join(lines) + ("\n" if lines else ""))
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
    else:
        for line in lines:
            print(line)

    status = 0
    if args.strict_blocks and result.rejected_blocks:
        print(f"{result.rejected_blocks} block(s) rejected", file=sys.stderr)
        status = 2
    if args.check:
        reports = summarize(check_scenario(result, scenario))
        for name in sorted(reports):
            r = reports[name]
            print(f"check {name}: {'pass' if r.passed else 'FAIL'}", file=sys.stderr)
            for v in r.violations:
                print(f"  {v}", file=sys.stderr)
        if not all(r.passed for r in reports.values()):
            status = 2
    return status


def cmd_fuzz(args: argparse.Namespace) -> int:
    orders = [ORDERS[args.order]] if args.order in ORDERS else list(ORDERS.values())
    failures = 0
    totals: dict[str, bool] = {}
    for i in range(args.runs):
        seed = args.seed + i
        config = _mutation_config(args.mutate, seed, args.blocks, args.users, orders[0])
        trace = gen_trace(config)
        reports = run_all_checks(trace)
        if len(orders) > 1:
            _, other_reports = check_order_robustness(trace)
            reports.extend(other_reports)
        summary = summarize(reports)
        bad = [r for r in summary.values() if not r.passed]
        for name, r in summary.items():
            totals[name] = totals.get(name, True) and r.passed
        if bad:
            failures += 1
            print(f"seed {seed}: FAIL ({', '.join(r.name for r in bad)})")
            for r in bad:
                for v in r.violations[:3]:
                    print(f"  {v}")
            print(
                f"  replay: dexsim replay --seed {seed} --blocks {args.blocks}"
                f" --users {args.users} --prefix 0"
            )
    for name in sorted(totals):
        print(f"check {name}: {'pass' if totals[name] else 'FAIL'}")
    print(f"{args.runs} run(s), {failures} failing")
    return 0 if failures == 0 else 2


def cmd_replay(args: argparse.Namespace) -> int:
    config = _mutation_config(args.mutate, args.seed, args.blocks, args.users, ORDERS[args.order])
    trace = gen_trace(config)
    steps = [s for s in trace.snapshots if not s.committed]
    if args.prefix > len(steps):
        print(
            f"error: prefix {args.prefix} beyond trace length {len(steps)}",
            file=sys.stderr,
        )
        return 1
    shown = steps if args.prefix == 0 else steps[: args.prefix]
    from .address import user as user_address

    prev_balances: dict = {
        user_address(i): config.initial_user_tez for i in range(config.users)
    }
    for s in shown:
        assert s.action is not None
        body = s.action.body
        print(
            f"block {s.block} step {s.step}: {type(body).__name__.lower()}"
            f" from={s.action.sender} amount={s.action.amount}"
        )
        diffs = []
        for a in sorted(set(prev_balances) | set(s.state.balances)):
            before = prev_balances.get(a, 0)
            after = s.state.balances.get(a, 0)
            if before != after:
                diffs.append(f"{a}: {before} -> {after}")
        if diffs:
            print("  balances: " + "; ".join(diffs))
        prev_balances = dict(s.state.balances)
    reports = summarize(run_all_checks(trace))
    failed = [r for r in reports.values() if not r.passed]
    for r in failed:
        print(f"check {r.name}: FAIL")
        for v in r.violations:
            print(f"  {v}")
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dexsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--order", choices=["dfs", "bfs"], default="dfs")
    p_run.add_argument("--trace-out")
    p_run.add_argument("--check", action="store_true")
    p_run.add_argument("--strict-blocks", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_fuzz = sub.add_parser("fuzz", help="run randomized invariant campaigns")
    p_fuzz.add_argument("--seed", type=int, default=_default_seed())
    p_fuzz.add_argument("--runs", type=int, default=10)
    p_fuzz.add_argument("--blocks", type=int, default=10)
    p_fuzz.add_argument("--users", type=int, default=4)
    p_fuzz.add_argument("--order", choices=["both", "dfs", "bfs"], default="both")
    p_fuzz.add_argument("--mutate", help="build a deliberately broken contract variant")
    p_fuzz.set_defaults(func=cmd_fuzz)

    p_replay = sub.add_parser("replay", help="re-execute a seed and show per-action diffs")
    p_replay.add_argument("--seed", type=int, default=_default_seed())
    p_replay.add_argument("--prefix", type=int, required=True, help="0 = whole trace")
    p_replay.add_argument("--blocks", type=int, default=10)
    p_replay.add_argument("--users", type=int, default=4)
    p_replay.add_argument("--order", choices=["dfs", "bfs"], default="dfs")
    p_replay.add_argument("--mutate")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
