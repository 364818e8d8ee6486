"""Command-line interface: plan / learn / pareto / replay.

Exit codes: 0 ok, 2 unsolvable goal, 3 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import yaml

from .behavior_tree import assemble_bt
from .harness import (
    ConfigError,
    UnsolvableGoalError,
    load_scenario,
    parse_scenario,
    plan_scenario,
    replay_trial,
    run_learning,
)
from .optimizer.results import ResultsFile
from .pddl import generate_domain, generate_problem, print_domain, print_problem
from .rewards import RewardConfigError
from .skills import SKILL_REGISTRY, SkillError
from .world_model import WorldModelError

EXIT_OK = 0
EXIT_UNSOLVABLE = 2
EXIT_CONFIG = 3


def _cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    domain = generate_domain(scenario.model, name=scenario.name)
    problem = generate_problem(scenario.model, scenario.goal, domain_name=scenario.name)
    the_plan = plan_scenario(scenario)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "domain.pddl"), "w") as fh:
        fh.write(print_domain(domain))
    with open(os.path.join(out_dir, "problem.pddl"), "w") as fh:
        fh.write(print_problem(problem))
    plan_doc = [{"skill": s.skill, "args": list(s.args)} for s in the_plan]
    with open(os.path.join(out_dir, "plan.yaml"), "w") as fh:
        yaml.safe_dump(plan_doc, fh, sort_keys=False)
    for step in the_plan:
        print(step)
    if args.show_bt:
        tree = assemble_bt(the_plan, scenario.model, SKILL_REGISTRY, success=scenario.success)
        print(tree.dump())
    return EXIT_OK


def _cmd_learn(args) -> int:
    scenario = load_scenario(args.scenario)
    repeats = max(1, args.repeats)
    base_out = args.out or f"{scenario.name}_results.jsonl"
    for k in range(repeats):
        out = base_out
        if repeats > 1:
            stem, ext = os.path.splitext(base_out)
            out = f"{stem}_r{k}{ext}"
        result = run_learning(
            scenario,
            master_seed=args.seed + k,
            iterations=args.iterations,
            out_path=out,
            resume=args.resume,
            jobs=args.jobs,
        )
        print(
            f"{scenario.name} seed={args.seed + k}: {len(result.trials)} trials, "
            f"front size {len(result.front_indices)}, {result.wall_clock_s:.1f}s -> {out}"
        )
    return EXIT_OK


def _load_results(path):
    header, trials, front = ResultsFile(path).read()
    doc = header.get("scenario_document")
    scenario = parse_scenario(doc, source=path) if doc else None
    return header, trials, front, scenario


def _cmd_pareto(args) -> int:
    _, trials, front, scenario = _load_results(args.results)
    if front is None:
        from .optimizer.pareto import non_dominated_indices

        names = list(trials[0].objectives) if trials else []
        front = non_dominated_indices([[t.objectives[n] for n in names] for t in trials])
    rows = []
    for idx in front:
        t = trials[idx]
        rows.append(
            {
                "trial": idx,
                "iteration": t.iteration,
                "objectives": t.raw_objectives,
                "success_rate": t.success_rate(),
                "configuration": t.configuration,
            }
        )
    if args.export:
        with open(args.export, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
        print(f"exported {len(rows)} Pareto points to {args.export}")
    else:
        for row in rows:
            objs = ", ".join(f"{k}={v:.4g}" for k, v in row["objectives"].items())
            cfg = ", ".join(f"{k}={v:.4g}" for k, v in row["configuration"].items())
            print(
                f"trial {row['trial']:4d} it {row['iteration']:4d}  {objs}  "
                f"success {row['success_rate']:.0%}  [{cfg}]"
            )
    return EXIT_OK


def _cmd_replay(args) -> int:
    _, trials, _, scenario = _load_results(args.results)
    if args.scenario:
        scenario = load_scenario(args.scenario)
    if scenario is None:
        raise ConfigError("results file lacks an embedded scenario; pass --scenario")
    if not (0 <= args.trial < len(trials)):
        raise ConfigError(f"unknown trial id {args.trial} (have {len(trials)} trials)")
    trial = trials[args.trial]
    entropies = [(s,) for s in args.seeds] if args.seeds else None
    outcome = replay_trial(scenario, trial, entropies=entropies, record_path=args.record)
    flags = " ".join("ok" if s else "fail" for s in outcome["successes"])
    print(f"trial {args.trial}: success rate {outcome['success_rate']:.0%} [{flags}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skillbo")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="generate PDDL, plan, and optionally show the BT")
    p.add_argument("scenario")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--show-bt", action="store_true")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("learn", help="run the multi-objective learning loop")
    p.add_argument("scenario")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("pareto", help="list or export the Pareto front of a results file")
    p.add_argument("results")
    p.add_argument("--list", action="store_true")
    p.add_argument("--export", default=None)
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("replay", help="re-execute a recorded trial")
    p.add_argument("results")
    p.add_argument("--trial", type=int, required=True)
    p.add_argument("--scenario", default=None)
    p.add_argument("--seeds", type=int, nargs="*", default=None)
    p.add_argument("--record", default=None)
    p.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnsolvableGoalError as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except (ConfigError, WorldModelError, SkillError, RewardConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
