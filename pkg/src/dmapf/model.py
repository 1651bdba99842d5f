"""Agents, traversals, plans, events and instances, plus the checks defined on them."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .costs import aggregate, reach_time
from .grid import Coord, GridMap, as_coord, manhattan

COST_KINDS = ("makespan", "soc", "sop")


@dataclass(frozen=True)
class Agent:
    id: object
    init: Coord
    goal: Coord
    join: int = 0

    def __post_init__(self):
        object.__setattr__(self, "init", as_coord(self.init))
        object.__setattr__(self, "goal", as_coord(self.goal))
        if self.join < 0:
            raise ValueError(f"agent {self.id!r}: negative join time {self.join}")


@dataclass(frozen=True)
class Traversal:
    """Timed locations `locs[i]` at time `start + i` for one agent."""

    agent: object
    start: int
    locs: tuple
    goal: Optional[Coord] = None

    def __post_init__(self):
        if not self.locs:
            raise ValueError(f"traversal of {self.agent!r} has no locations")
        object.__setattr__(self, "locs", tuple(as_coord(c) for c in self.locs))
        if self.goal is not None:
            object.__setattr__(self, "goal", as_coord(self.goal))

    @property
    def end(self) -> int:
        return self.start + len(self.locs) - 1

    @property
    def reach(self) -> int:
        return reach_time(self)

    @property
    def path(self) -> tuple:
        return path_of(self.locs)

    def at(self, t: int) -> Coord:
        if not self.start <= t <= self.end:
            raise IndexError(f"{self.agent!r} not present at t={t} (active {self.start}..{self.end})")
        return self.locs[t - self.start]

    def active(self, t: int) -> bool:
        return self.start <= t <= self.end

    def truncated(self, end: int) -> "Traversal":
        return Traversal(self.agent, self.start, self.locs[: end - self.start + 1], self.goal)

    def bad_moves(self) -> list[int]:
        """Times t where the step t -> t+1 is neither a wait nor a unit move."""
        return [self.start + i for i in range(len(self.locs) - 1)
                if manhattan(self.locs[i], self.locs[i + 1]) > 1]


def path_of(locs: Iterable) -> tuple:
    """Drop consecutive repeats: the sequence of vertices actually moved through."""
    out = []
    for c in locs:
        if not out or out[-1] != c:
            out.append(c)
    return tuple(out)


@dataclass
class PlanSet:
    traversals: dict
    horizon: int

    def __getitem__(self, agent) -> Traversal:
        return self.traversals[agent]

    def __contains__(self, agent) -> bool:
        return agent in self.traversals

    def __iter__(self):
        return iter(self.traversals.values())

    def __len__(self) -> int:
        return len(self.traversals)

    @property
    def agents(self) -> list:
        return list(self.traversals)

    def active_at(self, t: int) -> list[Traversal]:
        return [tr for tr in self.traversals.values() if tr.active(t)]


@dataclass(frozen=True)
class Event:
    t: int
    agents_leave: frozenset = frozenset()
    agents_join: tuple = ()
    obstacles_removed: frozenset = frozenset()
    obstacles_added: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "agents_leave", frozenset(self.agents_leave))
        object.__setattr__(self, "agents_join", tuple(self.agents_join))
        object.__setattr__(self, "obstacles_removed", frozenset(as_coord(c) for c in self.obstacles_removed))
        object.__setattr__(self, "obstacles_added", frozenset(as_coord(c) for c in self.obstacles_added))

    @property
    def changes(self) -> bool:
        return bool(self.agents_leave or self.agents_join or self.obstacles_removed or self.obstacles_added)


@dataclass(frozen=True)
class EventSequence:
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def at(self, t: int) -> list[Event]:
        return [e for e in self.events if e.t == t]


@dataclass
class MapfInstance:
    grid: GridMap
    agents: tuple
    cost_kind: str = "makespan"
    tau: Optional[int] = None

    def __post_init__(self):
        self.agents = tuple(self.agents)
        if self.cost_kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.cost_kind!r}")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        for what in ("init", "goal"):
            cells = [getattr(a, what) for a in self.agents]
            if len(set(cells)) != len(cells):
                raise ValueError(f"agent {what} locations must be pairwise distinct")
        for a in self.agents:
            if a.join != 0:
                raise ValueError(f"agent {a.id!r} of a MAPF instance must join at 0")
            for c in (a.init, a.goal):
                if not self.grid.in_bounds(c):
                    raise ValueError(f"agent {a.id!r}: {c} is outside the grid")

    def agent(self, agent_id) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


@dataclass
class DmapfInstance:
    base: MapfInstance
    events: EventSequence = field(default_factory=EventSequence)
    base_solution: Optional[PlanSet] = None
    cost_kind: str = "makespan"
    tau: Optional[int] = None
    alpha: Optional[int] = None

    @property
    def grid(self) -> GridMap:
        return self.base.grid

    def all_agents(self) -> dict:
        out = {a.id: a for a in self.base.agents}
        for e in self.events:
            for a in e.agents_join:
                out.setdefault(a.id, a)
        return out


def as_dmapf(instance) -> DmapfInstance:
    if isinstance(instance, DmapfInstance):
        return instance
    return DmapfInstance(base=instance, cost_kind=instance.cost_kind, tau=instance.tau)


# --- agent/obstacle presence over time ---------------------------------------

def active_agents(instance, t: int) -> set:
    """Agents present at time t: start from A and apply every event at or before t."""
    inst = as_dmapf(instance)
    present = {a.id for a in inst.base.agents}
    for e in inst.events:
        if e.t > t:
            break
        present = (present - e.agents_leave) | {a.id for a in e.agents_join}
    return present


def active_obstacles(instance, t: int) -> set:
    inst = as_dmapf(instance)
    present = set(inst.grid.blocked)
    for e in inst.events:
        if e.t > t:
            break
        present = (present - e.obstacles_removed) | set(e.obstacles_added)
    return present


def agents_up_to(instance, t: int) -> set:
    """Every agent present at some time <= t."""
    inst = as_dmapf(instance)
    seen = {a.id for a in inst.base.agents}
    for e in inst.events:
        if e.t > t:
            break
        seen |= {a.id for a in e.agents_join}
    return seen


# --- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    agent: object = None
    time: Optional[int] = None
    event: Optional[int] = None


@dataclass
class Report:
    violations: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind, detail, **where):
        self.violations.append(Violation(kind, detail, **where))

    def __bool__(self) -> bool:
        return self.ok


def validate_events(instance) -> Report:
    """Check an event sequence against validity conditions (i)-(iii).

    Violation kinds are "i", "ii", "iii" for the three conditions, plus
    "nonempty" for an event that changes nothing and "join_time"/"bounds" for
    malformed joining agents or obstacle cells.
    """
    inst = as_dmapf(instance)
    rep = Report()
    grid = inst.grid
    base_ids = {a.id for a in inst.base.agents}
    present, obstacles, seen = set(base_ids), set(grid.blocked), set(base_ids)
    prev_t = None
    for k, e in enumerate(inst.events):
        if not e.changes:
            rep.add("nonempty", f"event {k} at t={e.t} changes nothing", event=k, time=e.t)
        if prev_t is not None and not prev_t < e.t:
            rep.add("iii", f"event {k} at t={e.t} does not come after t={prev_t}", event=k, time=e.t)
        if e.t < 0:
            rep.add("iii", f"event {k} has negative time {e.t}", event=k, time=e.t)
        prev_t = e.t
        cond = "i" if k == 0 else "ii"
        # e_0 is checked against the initial sets, later events against time t-1
        leave_pool = base_ids if k == 0 else present
        join_pool = base_ids if k == 0 else seen
        obs_pool = set(grid.blocked) if k == 0 else obstacles
        for a in sorted(e.agents_leave - leave_pool, key=str):
            rep.add(cond, f"leaving agent {a!r} is not present before t={e.t}", agent=a, event=k, time=e.t)
        join_ids = [a.id for a in e.agents_join]
        for a in join_ids:
            if a in join_pool:
                rep.add(cond, f"joining agent {a!r} is already (or was) in the environment", agent=a, event=k, time=e.t)
        for a, n in Counter(join_ids).items():
            if n > 1:
                rep.add(cond, f"agent {a!r} joins twice in one event", agent=a, event=k, time=e.t)
        for a in e.agents_join:
            if a.join != e.t:
                rep.add("join_time", f"agent {a.id!r} joins at t={e.t} but declares join={a.join}", agent=a.id, event=k)
            for c in (a.init, a.goal):
                if not grid.in_bounds(c):
                    rep.add("bounds", f"agent {a.id!r}: {c} is outside the grid", agent=a.id, event=k)
        for o in sorted(e.obstacles_removed - obs_pool):
            rep.add(cond, f"removed obstacle {o} is not present before t={e.t}", event=k, time=e.t)
        for o in sorted(e.obstacles_added & (obs_pool - e.obstacles_removed)):
            rep.add(cond, f"added obstacle {o} is already present", event=k, time=e.t)
        for o in sorted(e.obstacles_added | e.obstacles_removed):
            if not grid.in_bounds(o):
                rep.add("bounds", f"obstacle {o} is outside the grid", event=k)
        present = (present - e.agents_leave) | set(join_ids)
        seen |= set(join_ids)
        obstacles = (obstacles - e.obstacles_removed) | set(e.obstacles_added)
    return rep


@dataclass(frozen=True)
class Conflict:
    kind: str
    agents: tuple
    time: int
    locations: tuple


def detect_conflicts(plans: PlanSet, include_following: bool = False) -> list[Conflict]:
    """Enumerate every vertex and swapping conflict (and following conflicts if asked).

    A conflict of kind "swap" or "following" at time t concerns the step
    t -> t+1. Following is only reported when the follower actually moves;
    a follower that stays put is already a vertex conflict at t.
    """
    trs = sorted(plans, key=lambda tr: str(tr.agent))
    if not trs:
        return []
    lo = min(tr.start for tr in trs)
    hi = max(tr.end for tr in trs)
    out = []
    for t in range(lo, hi + 1):
        here = defaultdict(list)
        for tr in trs:
            if tr.active(t):
                here[tr.at(t)].append(tr)
        for v, occ in here.items():
            for i in range(len(occ)):
                for j in range(i + 1, len(occ)):
                    out.append(Conflict("vertex", (occ[i].agent, occ[j].agent), t, (v,)))
        moves = {}
        movers = [tr for tr in trs if tr.active(t) and tr.active(t + 1)]
        for tr in movers:
            u, v = tr.at(t), tr.at(t + 1)
            if u != v:
                moves.setdefault((u, v), []).append(tr)
        for (u, v), group in moves.items():
            if (v, u) in moves and str(u) < str(v):
                for a in group:
                    for b in moves[(v, u)]:
                        if a.agent != b.agent:
                            out.append(Conflict("swap", (a.agent, b.agent), t, (u, v)))
        if include_following:
            for tr in movers:
                u, v = tr.at(t), tr.at(t + 1)
                if u == v:
                    continue
                for lead in here.get(v, ()):
                    if lead.agent != tr.agent and lead.active(t + 1):
                        out.append(Conflict("following", (lead.agent, tr.agent), t, (v,)))
    return out


def validate_solution(instance, plans: PlanSet, history: Optional[dict] = None,
                      include_following: bool = False) -> Report:
    """Check a (D-)MAPF solution against the problem definition.

    `history` maps agent id to the executed (start, locations) prefix the
    solution has to agree with. Violation kinds: missing, start, move, end,
    goal, obstacle, conflict, prefix, horizon, cost.
    """
    inst = as_dmapf(instance)
    rep = Report()
    agents = inst.all_agents()
    m = plans.horizon
    leave_at = {}
    for e in inst.events:
        if e.t > m:
            break
        for a in e.agents_leave:
            leave_at[a] = e.t
    expected = agents_up_to(inst, m)
    base_ids = {a.id for a in inst.base.agents}
    for aid in sorted(expected - set(plans.agents), key=str):
        rep.add("missing", f"no traversal for agent {aid!r}", agent=aid)
    for aid in sorted(set(plans.agents) - set(agents), key=str):
        rep.add("missing", f"traversal for unknown agent {aid!r}", agent=aid)

    for tr in sorted(plans, key=lambda x: str(x.agent)):
        a = agents.get(tr.agent)
        if a is None:
            continue
        if a.id in base_ids and tr.start != 0:
            rep.add("start", f"original agent starts at {tr.start}, not 0", agent=a.id, time=tr.start)
        if tr.start < a.join:
            rep.add("start", f"starts at {tr.start} before joining at {a.join}", agent=a.id, time=tr.start)
        if tr.locs[0] != a.init:
            rep.add("start", f"starts at {tr.locs[0]}, not its init {a.init}", agent=a.id, time=tr.start)
        for t in tr.bad_moves():
            rep.add("move", f"jumps {tr.at(t)} -> {tr.at(t + 1)}", agent=a.id, time=t)
        for t in range(tr.start, tr.end + 1):
            if not inst.grid.in_bounds(tr.at(t)):
                rep.add("move", f"leaves the grid at {tr.at(t)}", agent=a.id, time=t)
        want_end = leave_at.get(a.id, m)
        if tr.end != want_end:
            rep.add("end", f"traversal ends at {tr.end}, expected {want_end}", agent=a.id, time=tr.end)
        if a.id not in leave_at and tr.locs[-1] != a.goal:
            rep.add("goal", f"ends at {tr.locs[-1]}, goal is {a.goal}", agent=a.id, time=tr.end)
        if inst.alpha is not None and tr.end > inst.alpha:
            rep.add("horizon", f"ends at {tr.end} > alpha={inst.alpha}", agent=a.id, time=tr.end)

    obstacles_at = _obstacle_timeline(inst, m)
    for tr in sorted(plans, key=lambda x: str(x.agent)):
        for t in range(tr.start, tr.end + 1):
            if tr.at(t) in obstacles_at(t):
                rep.add("obstacle", f"on obstacle {tr.at(t)}", agent=tr.agent, time=t)

    for c in detect_conflicts(plans, include_following):
        rep.add("conflict", f"{c.kind} conflict {c.agents} at {c.locations}", agent=c.agents, time=c.time)

    if history:
        for aid, (start, locs) in sorted(history.items(), key=lambda kv: str(kv[0])):
            if aid not in plans:
                continue
            tr = plans[aid]
            for i, loc in enumerate(locs):
                t = start + i
                if not tr.active(t) or tr.at(t) != as_coord(loc):
                    rep.add("prefix", f"differs from executed location {loc} at t={t}", agent=aid, time=t)
                    break

    if inst.tau is not None and len(plans):
        value = aggregate(plans, inst.cost_kind)
        if value > inst.tau:
            rep.add("cost", f"{inst.cost_kind}={value} exceeds bound {inst.tau}")
    return rep


def _obstacle_timeline(inst: DmapfInstance, horizon: int):
    cache = {}

    def at(t):
        if t not in cache:
            cache[t] = active_obstacles(inst, t)
        return cache[t]
    return at


def check_path_preservation(old_path: Sequence, new: Traversal) -> dict:
    """Compare a revised traversal to an original path under two readings.

    "transitions" is the constraint-program reading: every consecutive pair
    of the original path is used as often as before, no vertex outside the
    path is visited and every path vertex is visited. "order" is the strict
    reading: the revised traversal moves through exactly the original path.
    """
    old_path = tuple(as_coord(c) for c in old_path)
    new_path = path_of(new.locs)
    want = Counter(zip(old_path, old_path[1:]))
    got = Counter(zip(new_path, new_path[1:]))
    counts_ok = all(got[p] == n for p, n in want.items())
    verts_ok = set(new_path) == set(old_path)
    return {
        "transitions": counts_ok and verts_ok,
        "transition_counts": counts_ok,
        "vertex_set": verts_ok,
        "order": new_path == old_path,
    }
