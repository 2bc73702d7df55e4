"""Command-line front end.

Exit codes: 0 success, 1 configuration/invariant error, 2 parse error
(malformed JSON or bad command line), 3 infeasible instance, 4 I/O error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import load_config, normalized_json
from .errors import CapacityExceeded, ConfigError, DomainError
from .harness import Scenario, ScenarioConfig, emit_results, run_scenario
from .heuristic import DecisionKind, HeuristicState, admit_one
from .ilp import SolveStatus, build_instance, export_lp, solve_exact
from .model import response_breakdown, validate_params, zone_response_time

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmra",
        description="Allocate virtual video mixers onto servers across "
                    "zones under a response-time QoS threshold.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", help="path to the JSON config")
    p.add_argument("--print-normalized", action="store_true",
                   help="echo the canonical form of the config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("heuristic", help="run the incremental allocator")
    p.add_argument("--config")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--zone-count", type=int, default=None)
    p.add_argument("--csv", help="write one row per arrival to this file")
    p.set_defaults(func=cmd_heuristic)

    p = sub.add_parser("solve", help="solve one zone exactly")
    p.add_argument("--config")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--zone-count", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-lp", help="write the instance as LP text")
    p.add_argument("--config")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--zone-count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("experiment", help="run a comparison scenario")
    p.add_argument("--config")
    p.add_argument("--scenario", required=True,
                   choices=[s.value for s in Scenario])
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"parse error: line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except CapacityExceeded as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def run():
    sys.exit(main())


def _load_validated(args):
    cfg = load_config(args.config)
    validate_params(cfg.params)
    params = cfg.params
    zone_count = getattr(args, "zone_count", None)
    if zone_count is not None:
        params = params.with_zones(zone_count)
        validate_params(params)
    return cfg, params


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    warnings = validate_params(cfg.params)
    for message in warnings:
        print(f"warning: {message}")
    if args.print_normalized:
        print(normalized_json(cfg))
    else:
        print("ok")
    return EXIT_OK


def cmd_heuristic(args) -> int:
    _, params = _load_validated(args)
    if args.users < 0:
        raise DomainError("--users must be >= 0")
    state = HeuristicState.empty()
    phase_counts = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0}
    rows = []
    for _ in range(args.users):
        decision, state = admit_one(state, params)
        if decision.kind is not DecisionKind.REJECTED:
            phase_counts[decision.phase] += 1
        alloc = state.alloc
        rt = (zone_response_time(alloc.v_max, alloc.vm_count, params)
              if alloc.vm_count else 0.0)
        rows.append((alloc.num_users + (1 if decision.kind is DecisionKind.REJECTED else 0),
                     decision.kind.value, decision.phase, alloc.vm_count,
                     alloc.v_max, f"{rt:.6f}"))
        if decision.kind is DecisionKind.REJECTED:
            break

    alloc = state.alloc
    users_txt = "[" + ",".join(str(u) for u in alloc.vm_users) + "]"
    print(f"alpha={alloc.vm_count} U={users_txt} Max_M={state.max_served}")
    print("admissions " + " ".join(f"phase{k}={v}"
                                   for k, v in sorted(phase_counts.items())))
    if alloc.vm_count:
        bd = response_breakdown(alloc.v_max, alloc.vm_count, params)
        print(f"response_ms total={bd.total:g} local_mix={bd.t_local_mix:g} "
              f"intra={bd.t_intra:g} vm_merge={bd.t_vm_merge:g} "
              f"wait={bd.t_wait:g} inter={bd.t_inter:g} "
              f"zone_merge={bd.t_zone_merge:g}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("arrival", "decision", "phase", "alpha",
                             "v_max", "response_ms"))
            writer.writerows(rows)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_solve(args) -> int:
    _, params = _load_validated(args)
    inst = build_instance(params, args.users)
    solution = solve_exact(inst)
    if solution.status is SolveStatus.INFEASIBLE:
        what = ("the response-time threshold admits no mixer count"
                if solution.binding == "qos"
                else "no packing onto the servers fits within capacity")
        print(f"infeasible: {what}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if solution.status is SolveStatus.NODE_BUDGET:
        print("gave up: node budget exhausted before proving optimality",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    partition = "[" + ",".join(str(u) for u in solution.alloc.vm_users) + "]"
    print(f"objective={round(solution.objective_value, 6)} partition={partition}")
    print(f"servers={list(solution.alloc.vm_server)} nodes={solution.nodes}")
    return EXIT_OK


def cmd_export_lp(args) -> int:
    _, params = _load_validated(args)
    inst = build_instance(params, args.users)
    text = export_lp(inst)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg, params = _load_validated(args)
    scenario = Scenario(args.scenario)
    sc_cfg = ScenarioConfig(
        params=params, scenario=scenario, zone_range=cfg.zone_range,
        models=cfg.models, fixed_nodes=cfg.fixed_nodes,
        zone_users=cfg.zone_users, seed=cfg.seed)
    result = run_scenario(sc_cfg, jobs=args.jobs)
    out_dir = args.out if args.out else cfg.output_dir
    written = emit_results(result, out_dir)
    for path in written:
        if path.suffix == ".csv":
            print(f"{path.name}: {len(result.cells)} rows -> {path}")
        else:
            print(f"{path.name}: figure -> {path}")
    return EXIT_OK
