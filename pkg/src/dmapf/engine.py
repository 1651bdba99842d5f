"""Plan, execute and repair: horizon deepening plus the three repair methods.

A :class:`Session` owns one encoding and one solver. The initial plan is
found by deepening the horizon until the goal check is satisfiable. Plans
are then executed one step at a time; each executed location becomes a
permanent assumption. When an event arrives the session updates the
encoding (leaves, obstacles, tunnels, joiners) and deepens again from the
current horizon.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from .encoder import ConstraintGroup, Encoding, StateError
from .grid import Tunnel, bfs_distances, compute_tunnel
from .model import Event, PlanSet, Traversal, as_dmapf, validate_solution
from .solver import SAT, TIMEOUT, make_solver

log = logging.getLogger(__name__)

METHODS = ("replan", "revise_augment", "tunnels_tc", "tunnels_tg")


@dataclass
class RunConfig:
    method: str = "replan"
    width: int = 0
    following: bool = False
    deadline: float = 200.0      # seconds per stage
    cap: Optional[int] = None    # largest horizon tried
    seed: int = 0
    prune: bool = True
    backend: str = "cdcl"
    keep_clauses: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.width < 0:
            raise ValueError("tunnel width must be nonnegative")
        if self.deadline <= 0:
            raise ValueError("deadline must be positive")


@dataclass
class StageRecord:
    index: int
    k: int
    horizon: Optional[int] = None
    encode_time: float = 0.0
    solve_time: float = 0.0
    outcome: str = ""
    agents_added: tuple = ()
    agents_removed: tuple = ()
    obstacles_added: tuple = ()
    obstacles_removed: tuple = ()
    solves: int = 0
    note: str = ""


class Session:
    def __init__(self, instance, config: Optional[RunConfig] = None):
        self.instance = as_dmapf(instance)
        self.config = config or RunConfig()
        cfg = self.config
        self.solver = make_solver(cfg.backend, cfg.seed)
        mode = {"tunnels_tc": "tc", "tunnels_tg": "tg"}.get(cfg.method)
        self.enc = Encoding(self.instance.grid, self.solver, following=cfg.following,
                            tunnel_mode=mode, prune=cfg.prune, keep_clauses=cfg.keep_clauses)
        self.now = 0
        self.plans: Optional[PlanSet] = None
        self.prefix: list[int] = []
        self.history: dict = {}          # agent -> (start, [executed locations])
        self.frozen: dict = {}           # agent -> Tunnel
        self.frozen_paths: dict = {}     # agent -> path the tunnel was built around
        self.stages: list[StageRecord] = []
        self.solutions: list = []        # PlanSet (or None) per stage
        self.failed = False
        self._live: list[ConstraintGroup] = []
        self._paths: dict = {}

    @property
    def horizon(self) -> int:
        return self.enc.m

    # -- initial plan -----------------------------------------------------------

    def solve_mapf(self) -> Optional[PlanSet]:
        """Deepen from horizon 0 until every agent can be at its goal."""
        if self.enc.m >= 0:
            raise StateError("session already planned")
        base = self.instance.base
        rec = StageRecord(index=0, k=0, agents_added=tuple(a.id for a in base.agents))
        t0 = time.monotonic()
        self.enc.encode_base(base.agents)
        rec.encode_time += time.monotonic() - t0
        for a in base.agents:
            self.history[a.id] = (0, [a.init])
        tau = base.tau if base.cost_kind == "makespan" else None
        cap = self._cap(tau)
        # no horizon below the longest single-agent distance can pass the check
        t0 = time.monotonic()
        floor = min(cap, self._distance_floor())
        while self.enc.m < floor:
            self.enc.encode_step(self.enc.m + 1)
        rec.encode_time += time.monotonic() - t0
        return self._run_stage(rec, cap)

    def _distance_floor(self) -> int:
        grid = self.instance.grid
        best = 0
        for a in self.instance.base.agents:
            d = bfs_distances(grid, a.init).get(a.goal)
            if d is None:
                return 0
            best = max(best, d)
        return best

    def adopt_solution(self, plans: PlanSet) -> PlanSet:
        """Start from a given plan instead of solving the base problem."""
        if self.enc.m >= 0:
            raise StateError("session already planned")
        rep = validate_solution(self.instance.base, plans)
        if not rep.ok:
            raise ValueError(f"given solution is invalid: {rep.violations[0].detail}")
        base = self.instance.base
        rec = StageRecord(index=0, k=0, agents_added=tuple(a.id for a in base.agents))
        t0 = time.monotonic()
        self.enc.encode_base(base.agents)
        for t in range(1, plans.horizon + 1):
            self.enc.encode_step(t)
        rec.encode_time = time.monotonic() - t0
        rec.horizon, rec.outcome = plans.horizon, "given"
        for a in base.agents:
            self.history[a.id] = (0, [a.init])
        self.plans = PlanSet(dict(plans.traversals), plans.horizon)
        self.stages.append(rec)
        self.solutions.append(self.plans)
        return self.plans

    def _cap(self, tau: Optional[int]) -> int:
        bounds = [b for b in (self.config.cap, self.instance.alpha, tau) if b is not None]
        if bounds:
            return min(bounds)
        g = self.instance.grid
        return max(self.enc.m, self.now + 2 * (g.width + g.height))

    # -- the deepening loop -----------------------------------------------------------

    def _issue_groups(self) -> list[ConstraintGroup]:
        for g in self._live:
            self.enc.release(g)
        m = self.enc.m
        live = [self.enc.encode_check(m, now=self.now)]
        for aid, path in self._paths.items():
            live.append(self.enc.encode_path_constraints(aid, path, m))
        self._live = live
        return live

    def _run_stage(self, rec: StageRecord, cap: int) -> Optional[PlanSet]:
        deadline = time.monotonic() + self.config.deadline
        self.stages.append(rec)
        enc = self.enc
        while True:
            t0 = time.monotonic()
            groups = self._issue_groups()
            rec.encode_time += time.monotonic() - t0
            assumptions = enc.assumptions() + self.prefix + [g.act for g in groups]
            res = self.solver.solve(assumptions, deadline=deadline)
            rec.solves += 1
            rec.solve_time += res.stats.get("time", 0.0)
            log.debug("stage %d horizon %d: %s", rec.index, enc.m, res.status)
            if res.status == SAT:
                rec.horizon, rec.outcome = enc.m, "sat"
                self.plans = PlanSet(enc.decode(res.model), enc.m)
                self.solutions.append(self.plans)
                return self.plans
            if res.status == TIMEOUT:
                rec.outcome = "timeout"
                break
            horizon_acts = {g.act for g in groups}
            if not horizon_acts.intersection(res.core):
                rec.outcome = "unsat_at_cap"
                rec.note = f"unsatisfiable at every horizon (proved at {enc.m})"
                break
            if enc.m >= cap:
                rec.outcome = "unsat_at_cap"
                rec.note = f"no solution up to horizon {cap}"
                break
            if time.monotonic() >= deadline:
                rec.outcome = "timeout"
                break
            t0 = time.monotonic()
            enc.encode_step(enc.m + 1)
            rec.encode_time += time.monotonic() - t0
        self.failed = True
        self.solutions.append(None)
        return None

    # -- execution ---------------------------------------------------------------

    def step_execute(self) -> int:
        """Advance the clock by one step and fix every agent's location there."""
        if self.plans is None:
            raise StateError("no plan to execute")
        if self.now + 1 > self.plans.horizon:
            raise StateError(f"cannot execute past the horizon {self.plans.horizon}")
        self.now += 1
        for tr in self.plans:
            if not tr.active(self.now):
                continue
            loc = tr.at(self.now)
            self.prefix.append(self.enc.location_literal(tr.agent, self.now, loc))
            self.history[tr.agent][1].append(loc)
        return self.now

    def advance_to(self, t: int) -> None:
        """Execute until time `t`, letting agents wait at their goals past the horizon."""
        if t < self.now:
            raise StateError(f"time {t} is already past (now={self.now})")
        while self.now < t:
            if self.now == self.plans.horizon:
                self._extend_by_waiting()
            self.step_execute()

    def _extend_by_waiting(self) -> None:
        m = self.enc.m + 1
        self.enc.encode_step(m)
        trs = {}
        for aid, tr in self.plans.traversals.items():
            st = self.enc.agents[aid]
            if st.end is None:
                tr = Traversal(aid, tr.start, tr.locs + (tr.locs[-1],), tr.goal)
            trs[aid] = tr
        self.plans = PlanSet(trs, m)

    # -- events --------------------------------------------------------------------

    def freeze_tunnels(self, k: int) -> list:
        """Compute a tunnel for every present agent that does not have one yet."""
        fresh = []
        for aid, st in self.enc.agents.items():
            if st.end is not None or aid in self.frozen or aid not in self.plans:
                continue
            path = self.plans[aid].path
            self.frozen_paths[aid] = path
            self.frozen[aid] = compute_tunnel(self.instance.grid, path, self.config.width, agent=aid)
            fresh.append(aid)
        return fresh

    def _check_event(self, e: Event) -> None:
        if e.t != self.now:
            raise ValueError(f"event at t={e.t} applied at t={self.now}")
        if not e.changes:
            raise ValueError(f"event at t={e.t} changes nothing")
        agents = self.enc.agents
        for aid in e.agents_leave:
            if aid not in agents or agents[aid].end is not None:
                raise ValueError(f"leaving agent {aid!r} is not present")
        for a in e.agents_join:
            if a.id in agents:
                raise ValueError(f"joining agent {a.id!r} already appeared")
            if a.join != e.t:
                raise ValueError(f"agent {a.id!r} declares join={a.join} but joins at {e.t}")
        current = self.enc.obstacles
        for o in e.obstacles_removed:
            if o not in current:
                raise ValueError(f"removed obstacle {o} is not present")
        for o in e.obstacles_added:
            if o in current - e.obstacles_removed:
                raise ValueError(f"added obstacle {o} is already present")

    def apply_event(self, e: Event) -> Optional[PlanSet]:
        if self.failed:
            raise StateError("session has failed")
        if self.plans is None:
            raise StateError("no plan to repair")
        self._check_event(e)
        cfg, enc, k = self.config, self.enc, self.now
        rec = StageRecord(index=len(self.stages), k=k,
                          agents_added=tuple(a.id for a in e.agents_join),
                          agents_removed=tuple(sorted(e.agents_leave, key=str)),
                          obstacles_added=tuple(sorted(e.obstacles_added)),
                          obstacles_removed=tuple(sorted(e.obstacles_removed)))
        t0 = time.monotonic()
        trs = dict(self.plans.traversals)
        for aid in rec.agents_removed:
            enc.remove_agent(aid, k)
            trs[aid] = trs[aid].truncated(k)
        self.plans = PlanSet(trs, self.plans.horizon)
        for o in rec.obstacles_removed:
            enc.remove_obstacle(o)
        for o in rec.obstacles_added:
            enc.add_obstacle(o, k)
        self._paths = {}
        if cfg.method in ("tunnels_tc", "tunnels_tg"):
            for aid in self.freeze_tunnels(k):
                if cfg.method == "tunnels_tc":
                    enc.encode_forbidden(aid, self.frozen[aid], k)
                else:
                    enc.restrict_to_tunnel(aid, self.frozen[aid], k)
        elif cfg.method == "revise_augment":
            self._paths = {aid: self.plans[aid].path for aid, st in enc.agents.items()
                           if st.end is None and aid in self.plans}
        for a in e.agents_join:
            enc.encode_new_agent(a, k)
            self.history[a.id] = (k, [a.init])
        rec.encode_time += time.monotonic() - t0
        tau = self.instance.tau if self.instance.cost_kind == "makespan" else None
        return self._run_stage(rec, self._cap(tau))


def run(instance, config: Optional[RunConfig] = None) -> Session:
    """Plan the base problem, then execute and repair through every event."""
    inst = as_dmapf(instance)
    s = Session(inst, config)
    if inst.base_solution is not None:
        s.adopt_solution(inst.base_solution)
    else:
        s.solve_mapf()
    for e in inst.events:
        if s.failed:
            break
        s.advance_to(e.t)
        s.apply_event(e)
    return s
