"""Command line: solve, simulate, validate, bench, gen."""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import formats
from .engine import METHODS, RunConfig, Session, run
from .generate import downsample_map, gen_diagonal_setup, random_instance, random_joiners
from .metrics import csv_row, stage_report, to_csv
from .model import DmapfInstance, Event, EventSequence, validate_events, validate_solution

EXIT_INVALID = 1
EXIT_INPUT = 2


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--deadline", type=float, default=200.0, help="seconds per stage")
    p.add_argument("--cap", type=int, help="largest horizon to try")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--following", action="store_true", help="also forbid following conflicts")
    p.add_argument("--backend", default="cdcl", help="cdcl (built in) or pysat[:name]")


def _load(args) -> DmapfInstance:
    if getattr(args, "instance", None):
        inst = formats.load_instance(args.instance)
    else:
        if not (args.map and args.scen):
            raise formats.ParseError("give --instance, or --map and --scen")
        grid = formats.parse_map(Path(args.map).read_text())
        warnings = []
        pairs = formats.parse_scen(Path(args.scen).read_text(), grid, warnings)
        for w in warnings:
            logging.warning("%s: %s", args.scen, w)
        inst = DmapfInstance(base=formats.instance_from_scen(grid, pairs, args.agents))
    if getattr(args, "events", None):
        inst.events = formats.events_from_list(formats.load_json(args.events))
    return inst


def cmd_solve(args) -> int:
    inst = _load(args)
    cfg = RunConfig(deadline=args.deadline, cap=args.cap, seed=args.seed,
                    following=args.following, backend=args.backend)
    s = Session(DmapfInstance(base=inst.base), cfg)
    plans = s.solve_mapf()
    rec = s.stages[0]
    print(f"outcome={rec.outcome} horizon={rec.horizon} encode={rec.encode_time:.2f}s solve={rec.solve_time:.2f}s")
    if plans is not None and args.out:
        formats.dump_json(formats.solution_to_dict(plans, inst.base), args.out)
    return 0


def cmd_simulate(args) -> int:
    inst = _load(args)
    rep = validate_events(inst)
    if not rep.ok:
        for v in rep.violations:
            print(f"event error ({v.kind}): {v.detail}", file=sys.stderr)
        return EXIT_INVALID
    cfg = RunConfig(method=args.method, width=args.width, deadline=args.deadline, cap=args.cap,
                    seed=args.seed, following=args.following, backend=args.backend)
    s = run(inst, cfg)
    report = stage_report(s, widths=_int_list(args.widths))
    if s.plans is not None:
        report["solution"] = formats.solution_to_dict(s.plans, inst)
    if args.solution and s.plans is not None:
        formats.dump_json(formats.solution_to_dict(s.plans, inst), args.solution)
    text = formats.dump_json(report, args.report)
    if not args.report:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    inst = formats.load_instance(args.instance)
    data = formats.load_json(args.solution)
    want = formats.instance_hash(inst)
    if data.get("instance_hash") not in (None, want):
        print(f"warning: solution was made for instance {data['instance_hash']}, not {want}", file=sys.stderr)
    plans = formats.solution_from_dict(data, inst)
    rep = validate_solution(inst, plans, include_following=args.following)
    for v in rep.violations:
        where = "" if v.time is None else f" t={v.time}"
        print(f"{v.kind}{where}: {v.detail}")
    print("ok" if rep.ok else f"{len(rep.violations)} violation(s)")
    return 0 if rep.ok else EXIT_INVALID


def _bench_one(job):
    name, inst_dict, cfg_kwargs = job
    inst = formats.instance_from_dict(inst_dict)
    s = run(inst, RunConfig(**cfg_kwargs))
    return csv_row(name, stage_report(s))


def _bench_jobs(args) -> list:
    methods = args.methods.split(",")
    widths = _int_list(args.widths)
    seeds = _int_list(args.seeds)
    sources = []
    if args.setup:
        for seed in seeds:
            inst = gen_diagonal_setup(args.setup, args.size, seed)
            sources.append((f"{args.setup}@{args.size}#{seed}", formats.instance_to_dict(inst), [seed]))
    else:
        files = sorted(Path(args.dir).glob("*.json")) if args.dir else []
        if not files:
            raise formats.ParseError("no instance files found; give a directory or --setup")
        for f in files:
            sources.append((f.stem, formats.instance_to_dict(formats.load_instance(f)), seeds))
    jobs = []
    for (name, d, run_seeds), method in itertools.product(sources, methods):
        tunnel = method.startswith("tunnels")
        for w, seed in itertools.product(widths if tunnel else widths[:1], run_seeds):
            cfg = dict(method=method, width=w if tunnel else 0, seed=seed, deadline=args.deadline,
                       cap=args.cap, following=args.following, backend=args.backend)
            jobs.append((name, d, cfg))
    return jobs


def cmd_bench(args) -> int:
    jobs = _bench_jobs(args)
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    text = to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen(args) -> int:
    if args.kind == "diagonal":
        inst = gen_diagonal_setup(args.setup, args.size, args.seed)
    elif args.kind == "random":
        import random

        rng = random.Random(args.seed)
        base = random_instance(args.width, args.height, args.agents, args.obstacles, rng=rng)
        events = []
        if args.joiners:
            events.append(Event(args.k, agents_join=tuple(random_joiners(base, args.joiners, args.k, rng))))
        inst = DmapfInstance(base=base, events=EventSequence(events))
    else:
        grid = formats.parse_map(Path(args.map).read_text())
        text = formats.serialize_map(downsample_map(grid, args.size))
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    text = formats.dump_json(formats.instance_to_dict(inst), args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmapf", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="plan a static instance by horizon deepening")
    p.add_argument("--instance")
    p.add_argument("--map")
    p.add_argument("--scen")
    p.add_argument("--agents", type=int, default=10, help="agents taken from the scenario")
    p.add_argument("--out", help="write the solution JSON here")
    _add_run_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="plan, execute and repair through an event script")
    p.add_argument("--instance")
    p.add_argument("--map")
    p.add_argument("--scen")
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--events", help="event script JSON (overrides events in the instance)")
    p.add_argument("--method", choices=METHODS, default="replan")
    p.add_argument("--width", type=int, default=0, help="tunnel width")
    p.add_argument("--widths", default="0,1,2", help="widths reported in the divergence columns")
    p.add_argument("--report", help="write the report JSON here instead of stdout")
    p.add_argument("--solution", help="write the final solution JSON here")
    _add_run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--following", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="run methods x widths x seeds and print CSV")
    p.add_argument("dir", nargs="?", help="directory of instance JSON files")
    p.add_argument("--setup", help="generate diagonal instances instead, e.g. 20+5")
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--methods", default="replan,tunnels_tc")
    p.add_argument("--widths", default="0")
    p.add_argument("--seeds", default="0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _add_run_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate instances or downsample a map")
    p.add_argument("kind", choices=("diagonal", "random", "downsample"))
    p.add_argument("--setup", default="20+5")
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--obstacles", type=int, default=0)
    p.add_argument("--joiners", type=int, default=0)
    p.add_argument("--k", type=int, default=1, help="join time of the random joiners")
    p.add_argument("--map", help="map to downsample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (formats.ParseError, ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
