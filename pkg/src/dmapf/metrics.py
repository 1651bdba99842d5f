"""Solution comparison (plan/path changes, divergence from tunnels) and run reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .costs import summarize
from .grid import compute_tunnel
from .model import PlanSet


@dataclass
class AgentDiff:
    plan_changed: bool
    path_changed: bool
    divergence: dict   # width -> distinct visited cells outside the tunnel


@dataclass
class SolutionDiff:
    per_agent: dict = field(default_factory=dict)
    widths: tuple = ()

    @property
    def n_plan_changes(self) -> int:
        return sum(d.plan_changed for d in self.per_agent.values())

    @property
    def n_path_changes(self) -> int:
        return sum(d.path_changed for d in self.per_agent.values())

    def diverted(self, w: int) -> tuple[int, list[int]]:
        """Number of agents leaving the width-`w` tunnel, and by how many cells each."""
        amounts = [d.divergence[w] for _, d in sorted(self.per_agent.items(), key=lambda kv: str(kv[0]))
                   if d.divergence[w] > 0]
        return len(amounts), amounts

    def as_dict(self) -> dict:
        return {
            "n_plan_changes": self.n_plan_changes,
            "n_path_changes": self.n_path_changes,
            "diverted": {str(w): {"count": self.diverted(w)[0], "amounts": self.diverted(w)[1]}
                         for w in self.widths},
        }


def diff_solutions(old: PlanSet, new: PlanSet, widths: Sequence[int] = (0,), k: int = 0,
                   agents: Optional[Iterable] = None, reference_paths: Optional[dict] = None,
                   grid=None) -> SolutionDiff:
    """Compare the plans of `agents` (default: every agent of `old`).

    Timed locations are compared on [k, min(old end, new end)]. Visited cells
    are taken from the whole new traversal and compared with the old path,
    or with `reference_paths[agent]` when given (e.g. frozen tunnel paths).
    `grid` is needed for widths > 0 (tunnels are clipped to its bounds).
    """
    agents = list(old.agents if agents is None else agents)
    out = SolutionDiff(widths=tuple(widths))
    for aid in agents:
        if aid not in old or aid not in new:
            raise ValueError(f"agent {aid!r} missing from {'old' if aid not in old else 'new'} plans")
        a, b = old[aid], new[aid]
        hi = min(a.end, b.end)
        lo = max(k, a.start, b.start)
        plan_changed = any(a.at(t) != b.at(t) for t in range(lo, hi + 1))
        ref = tuple(reference_paths[aid]) if reference_paths and aid in reference_paths else a.path
        visited = set(b.locs)
        path_changed = bool(visited - set(ref))
        div = {}
        for w in widths:
            if w == 0:
                div[w] = len(visited - set(ref))
            else:
                if grid is None:
                    raise ValueError("a grid is required for tunnel widths above 0")
                div[w] = len(visited - compute_tunnel(grid, ref, w).vertices)
        # a new cell can also be visited after the old horizon; that is a change too
        out.per_agent[aid] = AgentDiff(plan_changed or path_changed, path_changed, div)
    return out


TIMING_KEYS = ("encode_time", "solve_time")


def stage_report(session, widths: Sequence[int] = (0, 1, 2)) -> dict:
    """JSON-ready summary of a session: one entry per stage plus final costs."""
    cfg = session.config
    stages = []
    prev = None
    for rec, sol in zip(session.stages, session.solutions):
        entry = {
            "index": rec.index,
            "k": rec.k,
            "horizon": rec.horizon,
            "outcome": rec.outcome,
            "solves": rec.solves,
            "agents_added": [str(a) for a in rec.agents_added],
            "agents_removed": [str(a) for a in rec.agents_removed],
            "obstacles_added": [list(o) for o in rec.obstacles_added],
            "obstacles_removed": [list(o) for o in rec.obstacles_removed],
            "encode_time": round(rec.encode_time, 6),
            "solve_time": round(rec.solve_time, 6),
        }
        if rec.note:
            entry["note"] = rec.note
        if sol is not None:
            entry["costs"] = summarize(sol)
            if prev is not None:
                old_agents = [a for a in prev.agents if a in sol and sol[a].end > rec.k]
                refs = {a: session.frozen_paths[a] for a in old_agents if a in session.frozen_paths}
                d = diff_solutions(prev, sol, widths, k=rec.k, agents=old_agents,
                                   reference_paths=refs or None, grid=session.instance.grid)
                entry["diff"] = d.as_dict()
            prev = sol
        stages.append(entry)
    final = session.plans
    return {
        "method": cfg.method,
        "width": cfg.width,
        "following": cfg.following,
        "seed": cfg.seed,
        "status": "failed" if session.failed else "ok",
        "stages": stages,
        "final_costs": summarize(final) if final is not None and len(final) else None,
    }


CSV_FIELDS = ("name", "method", "width", "seed", "status", "stages", "final_horizon",
              "soc", "sop", "makespan", "n_plan_changes", "n_path_changes", "encode_time", "solve_time")


def csv_row(name: str, report: dict) -> dict:
    stages = report["stages"]
    costs = report["final_costs"] or {}
    last = stages[-1] if stages else {}
    plan_ch = sum(s.get("diff", {}).get("n_plan_changes", 0) for s in stages)
    path_ch = sum(s.get("diff", {}).get("n_path_changes", 0) for s in stages)
    return {
        "name": name,
        "method": report["method"],
        "width": report["width"],
        "seed": report["seed"],
        "status": report["status"],
        "stages": len(stages),
        "final_horizon": last.get("horizon"),
        "soc": costs.get("soc"),
        "sop": costs.get("sop"),
        "makespan": costs.get("makespan"),
        "n_plan_changes": plan_ch,
        "n_path_changes": path_ch,
        "encode_time": round(sum(s["encode_time"] for s in stages), 4),
        "solve_time": round(sum(s["solve_time"] for s in stages), 4),
    }


def to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
