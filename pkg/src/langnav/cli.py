"""Command line entry point.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import harness
from .embedding import load_vocabulary
from .localization import METHODS
from .metrics import RunLog, compute_report
from .world import MapError, load_map


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_goal(args):
    if args.goal is not None:
        try:
            x, y = (float(v) for v in args.goal.split(","))
        except ValueError:
            raise harness.ScenarioError(
                f"--goal must look like 'x,y', got {args.goal!r}")
        return {"point": [x, y]}
    if args.goal_node is not None:
        return {"node": args.goal_node}
    return {"text": args.goal_text}


def cmd_run(args):
    scn = harness.load_scenario(args.scenario)
    if args.method:
        scn = replace(scn, method=args.method)
    os.makedirs(args.out, exist_ok=True)
    log = harness.run_open_loop(scn, args.seed, out_dir=args.out)
    rep = compute_report(log, landmarks=harness.build_world(scn, args.seed)
                         .true_map.landmarks)
    print(f"run: scenario={scn.name} method={scn.method} seed={args.seed} "
          f"steps={len(log.records) - 1}")
    print(rep.pretty())
    print(f"log written to {args.out}")
    return 0


def cmd_nav(args):
    scn = harness.load_scenario(args.scenario)
    if args.method:
        scn = replace(scn, method=args.method)
    goal = _parse_goal(args)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    result, log = harness.run_closed_loop(scn, args.seed, goal=goal,
                                          out_dir=args.out)
    status = "reached" if result.success else "gave up"
    print(f"nav: scenario={scn.name} method={scn.method} seed={args.seed} "
          f"{status} after {result.steps} steps "
          f"(budget {result.budget})")
    print(f"  distance to true goal: {result.goal_distance:.2f} m")
    print(f"  path length:           {result.path_length:.1f} m")
    return 0 if result.success else 2


def cmd_ablate(args):
    scn = harness.load_scenario(args.scenario)
    param, values = harness.parse_sweep(args.sweep)
    methods = [m.strip() for m in args.methods.split(",")] if args.methods \
        else list(METHODS)
    rows = harness.run_ablation(scn, param, values, args.seeds,
                                methods=methods, jobs=args.jobs)
    out = args.out or "ablation.csv"
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    harness.write_ablation_csv(rows, out)
    bad = [r for r in rows if r["status"] != "ok"]
    print(f"ablate: {len(rows)} runs ({param} x {len(values)} values x "
          f"{args.seeds} seeds x {len(methods)} methods) -> {out}")
    if bad:
        print(f"  {len(bad)} runs failed; see the status column", file=sys.stderr)
        return 2
    return 0


def cmd_metrics(args):
    log = RunLog.load(args.log)
    landmarks = None
    map_path = log.meta.get("map_path")
    if map_path and os.path.exists(map_path):
        vocab_path = log.meta.get("vocab_path")
        vocab = load_vocabulary(vocab_path) if vocab_path \
            and os.path.exists(vocab_path) else None
        landmarks = load_map(map_path, vocab).landmarks
    rep = compute_report(log, landmarks=landmarks)
    print(rep.pretty())
    return 0


def build_parser():
    p = _Parser(prog="langnav",
                description="Topometric localization and navigation harness")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="open-loop localization along a route")
    run.add_argument("--scenario", required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)
    run.add_argument("--method", choices=METHODS, default=None)
    run.set_defaults(func=cmd_run)

    nav = sub.add_parser("nav", help="closed-loop navigation to a goal")
    nav.add_argument("--scenario", required=True)
    goal = nav.add_mutually_exclusive_group(required=True)
    goal.add_argument("--goal", help="goal point 'x,y' in map coordinates")
    goal.add_argument("--goal-node", type=int, help="goal road-network node id")
    goal.add_argument("--goal-text", help="language goal, e.g. 'bench'")
    nav.add_argument("--seed", type=int, default=0)
    nav.add_argument("--out", default=None)
    nav.add_argument("--method", choices=METHODS, default=None)
    nav.set_defaults(func=cmd_nav)

    abl = sub.add_parser("ablate", help="sweep a corruption parameter")
    abl.add_argument("--scenario", required=True)
    abl.add_argument("--sweep", required=True,
                     help="param=v1,v2,... or param=lo..hi[:step]")
    abl.add_argument("--seeds", type=int, required=True,
                     help="number of seeds (0..K-1) per cell")
    abl.add_argument("--out", default=None)
    abl.add_argument("--methods", default=None,
                     help="comma-separated subset of " + ",".join(METHODS))
    abl.add_argument("--jobs", type=int, default=1)
    abl.set_defaults(func=cmd_ablate)

    met = sub.add_parser("metrics", help="summarize a saved run log")
    met.add_argument("--log", required=True)
    met.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 1
    try:
        return args.func(args)
    except (harness.ScenarioError, MapError) as exc:
        print(f"langnav: config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"langnav: config error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:
        print(f"langnav: runtime error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
