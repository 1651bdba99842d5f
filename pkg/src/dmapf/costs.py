"""Per-traversal costs and their aggregates over plan sets."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostBreakdown:
    length: int      # waits + moves over [start, end)
    task_cost: int   # waits + moves over [start, reach)
    path_cost: int   # moves only
    reach: int


def reach_time(tr) -> int:
    """Start of the final stay at the goal.

    Without a known goal, the last location counts as the goal. A traversal
    that does not end at its goal (an agent that left early) never reaches
    it, so its reach is the end time.
    """
    locs = tr.locs
    goal = locs[-1] if tr.goal is None else tr.goal
    if locs[-1] != goal:
        return tr.start + len(locs) - 1
    i = len(locs) - 1
    while i > 0 and locs[i - 1] == goal:
        i -= 1
    return tr.start + i


def traversal_costs(tr) -> CostBreakdown:
    locs = tr.locs
    reach = reach_time(tr)
    moves = [locs[i] != locs[i + 1] for i in range(len(locs) - 1)]
    upto = reach - tr.start
    return CostBreakdown(
        length=len(moves),
        task_cost=upto,
        path_cost=sum(moves),
        reach=reach,
    )


def aggregate(plans, kind: str) -> int:
    """Sum of costs ("soc"), sum of path lengths ("sop") or makespan."""
    costs = [traversal_costs(tr) for tr in plans]
    if not costs:
        raise ValueError("cannot aggregate costs of an empty plan set")
    if kind == "soc":
        return sum(c.task_cost for c in costs)
    if kind == "sop":
        return sum(c.path_cost for c in costs)
    if kind == "makespan":
        return max(c.task_cost for c in costs)
    raise ValueError(f"unknown cost kind {kind!r}")


def summarize(plans) -> dict:
    return {kind: aggregate(plans, kind) for kind in ("soc", "sop", "makespan")}
