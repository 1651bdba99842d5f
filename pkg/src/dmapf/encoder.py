"""Incremental time-expanded CNF encoding of (dynamic) MAPF on grids.

A boolean ``var(a, t, v)`` says agent ``a`` is at cell ``v`` at time ``t``.
Steps are appended one time step at a time. Constraints that must be
retractable (goal checks, path preservation, obstacle epochs, agent
presence) are guarded by an activation literal that the caller passes as an
assumption; releasing a group adds the unit clause ``-act`` so the solver
can drop everything guarded by it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .cardinality import at_most_one, exactly_k
from .grid import Coord, GridMap, Tunnel, as_coord, bfs_distances, manhattan, neighbors
from .model import Agent, Traversal


class StateError(RuntimeError):
    """An operation was called in an order the encoding does not allow."""


@dataclass
class ConstraintGroup:
    id: int
    kind: tuple
    act: Optional[int] = None
    clauses: list = field(default_factory=list)
    n_clauses: int = 0
    released: bool = False

    @property
    def retractable(self) -> bool:
        return self.act is not None


class VarTable:
    """Variable ids for locations, moves and transitions."""

    def __init__(self):
        self.loc: dict = {}     # (agent, t) -> {Coord: var}
        self.move: dict = {}    # (from, to, t) -> var
        self.trans: dict = {}   # (agent, from, to, t) -> var
        self.names: dict = {}   # var -> readable name

    def get(self, agent, t: int, v) -> Optional[int]:
        return self.loc.get((agent, t), {}).get(v)

    def cells(self, agent, t: int) -> dict:
        return self.loc.get((agent, t), {})

    def __len__(self) -> int:
        return sum(len(d) for d in self.loc.values())


@dataclass
class _AgentState:
    agent: Agent
    start: int
    alive: int
    end: Optional[int] = None
    tunnel: Optional[Tunnel] = None
    frozen_at: Optional[int] = None
    forbid: bool = False
    filtered: bool = False


class Encoding:
    """Owns the variable table, constraint groups and the solver they feed.

    `tunnel_mode` only records which tunnel mechanism the session uses; the
    tunnel constraints themselves are added with :meth:`encode_forbidden`
    (forbidden cells) or :meth:`restrict_to_tunnel` (filtered movement).
    With `prune` on, ``var(a, t, v)`` only exists for cells within Manhattan
    distance ``t - start`` of the agent's initial cell.
    """

    def __init__(self, grid: GridMap, solver, following: bool = False,
                 tunnel_mode: Optional[str] = None, prune: bool = True,
                 keep_clauses: bool = True):
        if tunnel_mode not in (None, "tc", "tg"):
            raise ValueError(f"unknown tunnel mode {tunnel_mode!r}")
        self.grid = grid
        self.solver = solver
        self.following = following
        self.tunnel_mode = tunnel_mode
        self.prune = prune
        self.keep_clauses = keep_clauses
        self.vt = VarTable()
        self.groups: list[ConstraintGroup] = []
        self.agents: dict = {}
        self.m = -1
        self._cells = list(grid.cells())
        self._nbrs = {c: neighbors(grid, c) for c in self._cells}
        self._epochs: dict = {}      # obstacle -> (group, from_t)
        self._tail: dict = {}        # (t, v) -> literal "some agent at v at t"
        self._focc: dict = {}        # (t, v) -> var implied by any present agent at v at t
        self._dist_cache: dict = {}

    # -- plumbing ---------------------------------------------------------------

    def _group(self, kind: tuple, retractable: bool = False) -> ConstraintGroup:
        act = self._new_var(("act",) + kind) if retractable else None
        g = ConstraintGroup(id=len(self.groups), kind=kind, act=act)
        self.groups.append(g)
        return g

    def _new_var(self, name=None) -> int:
        v = self.solver.new_var()
        if name is not None:
            self.vt.names[v] = name
        return v

    def _emit(self, g: ConstraintGroup, clause) -> None:
        clause = list(clause)
        if self.keep_clauses:
            g.clauses.append(tuple(clause))
        g.n_clauses += 1
        self.solver.add_clause(clause)

    def release(self, group: ConstraintGroup) -> None:
        """Disable a retractable group for good."""
        if group.act is None:
            raise StateError(f"group {group.kind} is permanent")
        if not group.released:
            group.released = True
            self.solver.add_clause([-group.act])

    def _domain(self, st: _AgentState, t: int) -> list:
        if not self.prune:
            return self._cells
        r = t - st.start
        if r >= self.grid.diameter:
            return self._cells
        return [c for c in self._cells if manhattan(c, st.agent.init) <= r]

    def _present(self, st: _AgentState, t: int) -> bool:
        return st.start <= t and (st.end is None or t <= st.end)

    @property
    def obstacles(self) -> set:
        """Obstacles currently excluded from all future time steps."""
        return set(self._epochs)

    # -- per-agent constraints at one time step -----------------------------------

    def _alloc(self, st: _AgentState, t: int) -> dict:
        aid = st.agent.id
        cells = {}
        for v in self._domain(st, t):
            cells[v] = self._new_var(("at", aid, t, v))
        self.vt.loc[(aid, t)] = cells
        return cells

    def _occupy(self, g, t: int, v, x: int) -> None:
        """Add `x` to the at-most-one-agent constraint of cell `v` at time `t`."""
        tail = self._tail.get((t, v))
        if tail is None:
            self._tail[(t, v)] = x
            return
        self._emit(g, [-x, -tail])
        s = self._new_var()
        self._emit(g, [-tail, s])
        self._emit(g, [-x, s])
        self._tail[(t, v)] = s

    def _exclusions(self, g, st: _AgentState, t: int, cells: dict) -> None:
        for o, (eg, from_t) in self._epochs.items():
            if t >= from_t and o in cells:
                self._emit(eg, [-eg.act, -cells[o]])
        if st.forbid and t >= st.frozen_at:
            for v, x in cells.items():
                if v not in st.tunnel:
                    self._emit(g, [-x])

    def _encode_first(self, g, st: _AgentState, t: int) -> None:
        cells = self._alloc(st, t)
        init = st.agent.init
        if init not in cells:
            raise StateError(f"initial cell {init} of {st.agent.id!r} missing from its domain")
        self._emit(g, [cells[init]])
        at_most_one(list(cells.values()), self._new_var, lambda c: self._emit(g, c))
        for v, x in cells.items():
            self._occupy(g, t, v, x)
        self._exclusions(g, st, t, cells)

    def _successors(self, st: _AgentState, t: int, v, cells: dict) -> list:
        out = [v] + self._nbrs[v]
        if st.filtered and t > st.frozen_at:
            out = [u for u in out if u in st.tunnel]
        return [cells[u] for u in out if u in cells]

    def _encode_next(self, g, st: _AgentState, t: int) -> None:
        aid = st.agent.id
        prev = self.vt.cells(aid, t - 1)
        cells = self._alloc(st, t)
        emit = lambda c: self._emit(g, c)
        self._emit(g, [-st.alive] + list(cells.values()))
        at_most_one(list(cells.values()), self._new_var, emit)
        for v, x in prev.items():
            self._emit(g, [-st.alive, -x] + self._successors(st, t, v, cells))
        for v, x in cells.items():
            self._occupy(g, t, v, x)
        # swaps: mv(v,u,t) is implied by a move v -> u of any agent
        for v, x in prev.items():
            for u in self._nbrs[v]:
                y = cells.get(u)
                if y is None:
                    continue
                key = (v, u, t)
                mv = self.vt.move.get(key)
                if mv is None:
                    mv = self._new_var(("move", v, u, t))
                    self.vt.move[key] = mv
                    back = self.vt.move.get((u, v, t))
                    if back is not None:
                        self._emit(g, [-mv, -back])
                self._emit(g, [-x, -y, mv])
        if self.following:
            for v, x in prev.items():
                self._emit(g, [-st.alive, -x, self._follow_var(t - 1, v)])
            for v, y in cells.items():
                if v in prev:
                    self._emit(g, [-y, prev[v], -self._follow_var(t - 1, v)])
                else:
                    self._emit(g, [-y, -self._follow_var(t - 1, v)])
        self._exclusions(g, st, t, cells)

    def _follow_var(self, t: int, v) -> int:
        x = self._focc.get((t, v))
        if x is None:
            x = self._new_var(("occupied", t, v))
            self._focc[(t, v)] = x
        return x

    # -- public encoding operations -------------------------------------------------

    def encode_base(self, agents: Iterable[Agent], obstacles: Optional[Iterable] = None) -> ConstraintGroup:
        """Time step 0: initial cells of the original agents and the map obstacles."""
        if self.m >= 0:
            raise StateError("base already encoded")
        obstacles = self.grid.blocked if obstacles is None else {as_coord(o) for o in obstacles}
        g = self._group(("base",))
        self.m = 0
        for a in agents:
            if a.id in self.agents:
                raise ValueError(f"duplicate agent id {a.id!r}")
            st = _AgentState(agent=a, start=0, alive=self._new_var(("alive", a.id)))
            self.agents[a.id] = st
        # map obstacles are permanent units at t=0 and a retractable epoch after
        for o in sorted(obstacles):
            eg = self._group(("obstacle", o, 0), retractable=True)
            self._epochs[o] = (eg, 0)
        for st in self.agents.values():
            cells = self._alloc(st, 0)
            self._emit(g, [cells[st.agent.init]])
            for o in sorted(obstacles):
                if o in cells:
                    self._emit(g, [-cells[o]])
        step0 = self._group(("step", 0))
        for st in self.agents.values():
            cells = self.vt.cells(st.agent.id, 0)
            at_most_one(list(cells.values()), self._new_var, lambda c: self._emit(step0, c))
            for v, x in cells.items():
                self._occupy(step0, 0, v, x)
        return g

    def encode_step(self, t: int) -> ConstraintGroup:
        if self.m < 0:
            raise StateError("encode_base must come first")
        if t != self.m + 1:
            raise StateError(f"next step is {self.m + 1}, got {t}")
        g = self._group(("step", t))
        self.m = t
        for st in self.agents.values():
            if self._present(st, t) and st.start < t:
                self._encode_next(g, st, t)
        return g

    def encode_new_agent(self, agent: Agent, k: int) -> ConstraintGroup:
        if agent.id in self.agents:
            raise ValueError(f"agent {agent.id!r} is already encoded")
        if self.m < 0:
            raise StateError("encode_base must come first")
        if not 0 <= k <= self.m:
            raise StateError(f"join time {k} outside encoded steps 0..{self.m}")
        g = self._group(("new_agent", agent.id, k))
        st = _AgentState(agent=agent, start=k, alive=self._new_var(("alive", agent.id)))
        self.agents[agent.id] = st
        self._encode_first(g, st, k)
        for t in range(k + 1, self.m + 1):
            self._encode_next(g, st, t)
        return g

    def remove_agent(self, agent_id, t: int) -> ConstraintGroup:
        """The agent leaves after time `t`: it is absent from every later step."""
        st = self.agents[agent_id]
        if st.end is not None:
            raise StateError(f"agent {agent_id!r} already left at {st.end}")
        if t < st.start:
            raise StateError(f"agent {agent_id!r} cannot leave before joining")
        g = self._group(("leave", agent_id, t))
        st.end = t
        self._emit(g, [-st.alive])
        for tt in range(t + 1, self.m + 1):
            for x in self.vt.cells(agent_id, tt).values():
                self._emit(g, [-x])
        return g

    def add_obstacle(self, o, t: int) -> ConstraintGroup:
        """Exclude cell `o` for every agent from time `t` on."""
        o = as_coord(o)
        if o in self._epochs:
            raise StateError(f"{o} is already an obstacle")
        if not self.grid.in_bounds(o):
            raise ValueError(f"obstacle {o} outside the grid")
        eg = self._group(("obstacle", o, t), retractable=True)
        self._epochs[o] = (eg, t)
        for st in self.agents.values():
            for tt in range(max(t, st.start), self.m + 1):
                if not self._present(st, tt):
                    continue
                x = self.vt.get(st.agent.id, tt, o)
                if x is not None:
                    self._emit(eg, [-eg.act, -x])
        return eg

    def remove_obstacle(self, o) -> None:
        o = as_coord(o)
        if o not in self._epochs:
            raise StateError(f"{o} is not an obstacle")
        eg, _ = self._epochs.pop(o)
        self.release(eg)

    def encode_check(self, m: Optional[int] = None, now: int = 0) -> ConstraintGroup:
        """Retractable group: every present agent is at its goal at time `m`.

        Also rules out cells from which the goal is farther away (avoiding
        current obstacles) than the remaining time, for times at or after
        `now`. That is implied by the goal condition and only helps the
        solver.
        """
        m = self.m if m is None else m
        if m > self.m:
            raise StateError(f"check at {m} before step {m} is encoded")
        g = self._group(("check", m), retractable=True)
        # only obstacles already in place at `now` block every later step
        blocked = frozenset(o for o, (_, from_t) in self._epochs.items() if from_t <= now)
        for st in self.agents.values():
            if st.end is not None or st.start > m:
                continue
            aid, goal = st.agent.id, st.agent.goal
            x = self.vt.get(aid, m, goal)
            if x is None:
                self._emit(g, [-g.act])
                continue
            self._emit(g, [-g.act, x])
            dist = self._distances(goal, blocked)
            for t in range(max(st.start, now), m):
                for v, y in self.vt.cells(aid, t).items():
                    if dist.get(v, m + 1) > m - t:
                        self._emit(g, [-g.act, -y])
        return g

    def _distances(self, goal, blocked) -> dict:
        key = (goal, blocked)
        if key not in self._dist_cache:
            self._dist_cache[key] = bfs_distances(self.grid, goal, blocked)
        return self._dist_cache[key]

    def encode_path_constraints(self, agent_id, path: Sequence, m: Optional[int] = None) -> ConstraintGroup:
        """Retractable group keeping the agent on its original path.

        Every consecutive pair of `path` is traversed exactly as often as in
        `path`, no other cell is visited, and every path cell is visited.
        Transitions are counted over the whole traversal, up to time `m`.
        """
        path = [as_coord(c) for c in path]
        if not path:
            raise ValueError("empty path")
        st = self.agents[agent_id]
        m = self.m if m is None else m
        last = m if st.end is None else min(m, st.end)
        g = self._group(("path", agent_id, m), retractable=True)
        act = g.act
        emit = lambda c: self._emit(g, c)
        on_path = set(path)
        times = range(st.start, last + 1)
        for t in times:
            for v, x in self.vt.cells(agent_id, t).items():
                if v not in on_path:
                    emit([-act, -x])
        for v in sorted(on_path):
            emit([-act] + [x for t in times if (x := self.vt.get(agent_id, t, v)) is not None])
        for (a, b), count in sorted(Counter(zip(path, path[1:])).items()):
            lits = []
            for t in range(st.start + 1, last + 1):
                x, y = self.vt.get(agent_id, t - 1, a), self.vt.get(agent_id, t, b)
                if x is not None and y is not None:
                    lits.append(self._transition(g, agent_id, a, b, t, x, y))
            exactly_k(lits, count, self._new_var, emit, guard=act)
        return g

    def _transition(self, g, agent_id, a, b, t, x, y) -> int:
        key = (agent_id, a, b, t)
        z = self.vt.trans.get(key)
        if z is None:
            z = self._new_var(("pair",) + key)
            self.vt.trans[key] = z
            self._emit(g, [-z, x])
            self._emit(g, [-z, y])
            self._emit(g, [-x, -y, z])
        return z

    def encode_forbidden(self, agent_id, tunnel: Tunnel, k: int) -> ConstraintGroup:
        """Forbid every cell outside the tunnel from time `k` on (permanent)."""
        st = self.agents[agent_id]
        if st.tunnel is not None:
            raise StateError(f"agent {agent_id!r} already has a tunnel")
        st.tunnel, st.frozen_at, st.forbid = tunnel, k, True
        g = self._group(("forbidden", agent_id))
        for t in range(max(k, st.start), self.m + 1):
            if not self._present(st, t):
                continue
            for v, x in self.vt.cells(agent_id, t).items():
                if v not in tunnel:
                    self._emit(g, [-x])
        return g

    def restrict_to_tunnel(self, agent_id, tunnel: Tunnel, k: int) -> ConstraintGroup:
        """Only allow moves into tunnel cells after time `k` (permanent)."""
        st = self.agents[agent_id]
        if st.tunnel is not None:
            raise StateError(f"agent {agent_id!r} already has a tunnel")
        st.tunnel, st.frozen_at, st.filtered = tunnel, k, True
        g = self._group(("tunnel", agent_id))
        for t in range(max(k, st.start) + 1, self.m + 1):
            if not self._present(st, t):
                continue
            prev, cells = self.vt.cells(agent_id, t - 1), self.vt.cells(agent_id, t)
            for v, x in prev.items():
                self._emit(g, [-st.alive, -x] + self._successors(st, t, v, cells))
        return g

    # -- solving interface ----------------------------------------------------------

    def assumptions(self) -> list[int]:
        """Literals that must hold in every solve: agent presence and obstacle epochs."""
        out = [st.alive for st in self.agents.values() if st.end is None]
        out += [eg.act for eg, _ in self._epochs.values()]
        return out

    def location_literal(self, agent_id, t: int, v) -> int:
        x = self.vt.get(agent_id, t, as_coord(v))
        if x is None:
            raise KeyError(f"no variable for {agent_id!r} at {v} at t={t}")
        return x

    def decode(self, model, m: Optional[int] = None) -> dict:
        """Agent id -> Traversal read off a satisfying assignment."""
        m = self.m if m is None else m
        out = {}
        for aid, st in self.agents.items():
            if st.start > m:
                continue
            last = m if st.end is None else min(m, st.end)
            locs = []
            for t in range(st.start, last + 1):
                here = [v for v, x in self.vt.cells(aid, t).items() if model[x]]
                if len(here) != 1:
                    raise StateError(f"model places {aid!r} at {len(here)} cells at t={t}")
                locs.append(here[0])
            out[aid] = Traversal(aid, st.start, tuple(locs), st.agent.goal)
        return out

    def dump_cnf(self) -> str:
        """The clause database as DIMACS text, with a comment line per group."""
        if not self.keep_clauses:
            raise StateError("clauses were not kept")
        lines = []
        n = sum(len(g.clauses) + (1 if g.released else 0) for g in self.groups)
        lines.append(f"p cnf {self.solver.n_vars} {n}")
        for g in self.groups:
            act = "" if g.act is None else f" act={g.act}"
            lines.append(f"c group {g.id} {' '.join(map(str, g.kind))}{act}")
            for c in g.clauses:
                lines.append(" ".join(map(str, c)) + " 0")
            if g.released:
                lines.append(f"{-g.act} 0")
        return "\n".join(lines) + "\n"
