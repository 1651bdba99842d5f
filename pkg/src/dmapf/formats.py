"""Readers and writers: benchmark maps and scenarios, and JSON instances,
event scripts and solutions."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

from .grid import Coord, GridMap, bfs_distances
from .model import Agent, DmapfInstance, Event, EventSequence, MapfInstance, PlanSet, Traversal

PASSABLE = {".", "G"}
BLOCKED = {"@", "O", "T"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# -- benchmark maps -------------------------------------------------------------

def parse_map(text: str) -> GridMap:
    lines = text.splitlines()
    header = {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        if parts[0] == "map":
            break
        if len(parts) != 2:
            raise ParseError(f"bad header line {lines[i - 1]!r}", i)
        header[parts[0]] = parts[1]
    else:
        raise ParseError("missing 'map' line", len(lines))
    try:
        height, width = int(header["height"]), int(header["width"])
    except KeyError as e:
        raise ParseError(f"missing {e.args[0]} in header", i) from None
    except ValueError:
        raise ParseError("height and width must be integers", i) from None
    body = lines[i:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != height:
        raise ParseError(f"header says {height} rows, found {len(body)}", i + len(body))
    blocked = set()
    for r, row in enumerate(body):
        row = row.rstrip("\r\n")
        if len(row) != width:
            raise ParseError(f"row has {len(row)} cells, header says {width}", i + r + 1)
        for c, ch in enumerate(row):
            if ch in BLOCKED:
                blocked.add(Coord(r, c))
            elif ch not in PASSABLE:
                raise ParseError(f"unknown map character {ch!r} at column {c}", i + r + 1)
    return GridMap(width, height, frozenset(blocked))


def serialize_map(grid: GridMap) -> str:
    rows = ["".join("@" if (r, c) in grid.blocked else "." for c in range(grid.width))
            for r in range(grid.height)]
    return "type octile\nheight {}\nwidth {}\nmap\n{}\n".format(grid.height, grid.width, "\n".join(rows))


# -- benchmark scenarios ----------------------------------------------------------

def parse_scen(text: str, grid: GridMap, warnings: Optional[list] = None) -> list[tuple[Coord, Coord]]:
    """(init, goal) pairs of a scenario file; x is the column and y the row.

    Rows with an endpoint on an obstacle are skipped and reported in
    `warnings`; coordinates outside the map are an error.
    """
    pairs = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("version"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) < 8:
            raise ParseError(f"expected at least 8 fields, got {len(parts)}", n)
        try:
            x1, y1, x2, y2 = (int(p) for p in parts[4:8])
        except ValueError:
            raise ParseError("coordinates must be integers", n) from None
        init, goal = Coord(y1, x1), Coord(y2, x2)
        for c in (init, goal):
            if not grid.in_bounds(c):
                raise ParseError(f"cell {c} outside the {grid.height}x{grid.width} map", n)
        if init in grid.blocked or goal in grid.blocked:
            if warnings is not None:
                warnings.append(f"line {n}: endpoint on an obstacle, skipped")
            continue
        pairs.append((init, goal))
    return pairs


def serialize_scen(pairs, grid: GridMap, map_name: str = "map.map") -> str:
    out = ["version 1"]
    for i, (s, g) in enumerate(pairs):
        d = bfs_distances(grid, s).get(g, -1)
        out.append("\t".join(map(str, (i // 10, map_name, grid.width, grid.height,
                                        s.col, s.row, g.col, g.row, f"{float(d):.8f}"))))
    return "\n".join(out) + "\n"


def instance_from_scen(grid: GridMap, pairs, n: int) -> MapfInstance:
    """The first `n` pairs with pairwise distinct starts and goals."""
    agents, inits, goals = [], set(), set()
    for s, g in pairs:
        if len(agents) == n:
            break
        if s in inits or g in goals:
            continue
        inits.add(s)
        goals.add(g)
        agents.append(Agent(f"a{len(agents)}", s, g))
    if len(agents) < n:
        raise ValueError(f"scenario has only {len(agents)} usable pairs, {n} requested")
    return MapfInstance(grid, agents)


# -- JSON ---------------------------------------------------------------------

def _cell(c) -> list:
    return [int(c[0]), int(c[1])]


def _coord(x, where: str) -> Coord:
    if not (isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, int) for v in x)):
        raise ParseError(f"{where}: expected [row, col], got {x!r}")
    return Coord(x[0], x[1])


def agent_to_dict(a: Agent) -> dict:
    d = {"id": a.id, "init": _cell(a.init), "goal": _cell(a.goal)}
    if a.join:
        d["join"] = a.join
    return d


def events_to_list(events) -> list:
    out = []
    for e in events:
        out.append({
            "t": e.t,
            "joins": [{"id": a.id, "init": _cell(a.init), "goal": _cell(a.goal)} for a in e.agents_join],
            "leaves": sorted(e.agents_leave, key=str),
            "obs_add": [_cell(o) for o in sorted(e.obstacles_added)],
            "obs_remove": [_cell(o) for o in sorted(e.obstacles_removed)],
        })
    return out


def events_from_list(data) -> EventSequence:
    if isinstance(data, dict):
        data = data.get("events", [])
    events = []
    for i, d in enumerate(data):
        where = f"event {i}"
        if "t" not in d or not isinstance(d["t"], int):
            raise ParseError(f"{where}: missing integer 't'")
        t = d["t"]
        joins = tuple(Agent(j["id"], _coord(j["init"], where), _coord(j["goal"], where), join=t)
                      for j in d.get("joins", []))
        events.append(Event(t, agents_leave=frozenset(d.get("leaves", [])), agents_join=joins,
                            obstacles_removed=frozenset(_coord(o, where) for o in d.get("obs_remove", [])),
                            obstacles_added=frozenset(_coord(o, where) for o in d.get("obs_add", []))))
    return EventSequence(events)


def solution_to_dict(plans: PlanSet, instance=None) -> dict:
    d = {
        "horizon": plans.horizon,
        "traversals": [{"agent": tr.agent, "start": tr.start, "locs": [_cell(c) for c in tr.locs]}
                       for tr in sorted(plans, key=lambda tr: str(tr.agent))],
    }
    if instance is not None:
        d["instance_hash"] = instance_hash(instance)
    return d


def solution_from_dict(d: dict, instance=None) -> PlanSet:
    goals = {}
    if instance is not None:
        inst = instance if isinstance(instance, DmapfInstance) else DmapfInstance(base=instance)
        goals = {aid: a.goal for aid, a in inst.all_agents().items()}
    trs = {}
    for i, t in enumerate(d.get("traversals", [])):
        locs = tuple(_coord(c, f"traversal {i}") for c in t["locs"])
        trs[t["agent"]] = Traversal(t["agent"], int(t.get("start", 0)), locs, goals.get(t["agent"]))
    return PlanSet(trs, int(d["horizon"]))


def instance_to_dict(inst) -> dict:
    if isinstance(inst, MapfInstance):
        inst = DmapfInstance(base=inst, cost_kind=inst.cost_kind, tau=inst.tau)
    base = inst.base
    g = base.grid
    d = {
        "map": {"width": g.width, "height": g.height, "blocked": [_cell(c) for c in sorted(g.blocked)]},
        "agents": [agent_to_dict(a) for a in base.agents],
        "cost_kind": base.cost_kind,
        "tau": base.tau,
        "events": events_to_list(inst.events),
        "dynamic_cost_kind": inst.cost_kind,
        "dynamic_tau": inst.tau,
        "alpha": inst.alpha,
    }
    if inst.base_solution is not None:
        d["base_solution"] = solution_to_dict(inst.base_solution)
    return d


def instance_from_dict(d: dict, base_dir: Optional[Path] = None) -> DmapfInstance:
    m = d.get("map")
    if m is None:
        raise ParseError("instance has no 'map'")
    if isinstance(m, str):
        path = Path(m) if base_dir is None else Path(base_dir) / m
        grid = parse_map(path.read_text())
    else:
        grid = GridMap(m["width"], m["height"], frozenset(_coord(c, "map") for c in m.get("blocked", [])))
    agents = [Agent(a["id"], _coord(a["init"], f"agent {a['id']}"), _coord(a["goal"], f"agent {a['id']}"))
              for a in d.get("agents", [])]
    base = MapfInstance(grid, agents, d.get("cost_kind", "makespan"), d.get("tau"))
    inst = DmapfInstance(base=base, events=events_from_list(d.get("events", [])),
                         cost_kind=d.get("dynamic_cost_kind", base.cost_kind),
                         tau=d.get("dynamic_tau"), alpha=d.get("alpha"))
    if d.get("base_solution"):
        inst.base_solution = solution_from_dict(d["base_solution"], base)
    return inst


def instance_hash(inst) -> str:
    d = instance_to_dict(inst)
    d.pop("base_solution", None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.lineno) from None


def load_instance(path) -> DmapfInstance:
    path = Path(path)
    return instance_from_dict(load_json(path), base_dir=path.parent)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
